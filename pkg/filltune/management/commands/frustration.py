from filltune.management.stage_command import StageCommand
from filltune.pipeline import FRUSTRATION_FILE


class Command(StageCommand):
    help = 'Score the frustration of every network edge'

    def run_stage(self, run, **options):
        overall = run.frustration()
        if overall is None:
            self.stdout.write(self.style.WARNING('Network has no transition states'))
        else:
            self.stdout.write(f'Overall frustration: {overall:.6g}')
        self.stdout.write(self.style.SUCCESS(f'Wrote {run.path(FRUSTRATION_FILE)}'))
