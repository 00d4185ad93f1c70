from filltune.management.stage_command import StageCommand
from filltune.pipeline import DATASET_FILE, STAGES


class Command(StageCommand):
    help = 'Run every stage from sampling to fill-point selection'

    def run_stage(self, run, **options):
        for name in STAGES[:-1]:
            self.stdout.write(f'Running {name}...')
            getattr(run, name)()
        self.stdout.write('Running select...')
        dataset = run.select()
        self.report_dataset(dataset, run.path(DATASET_FILE))
