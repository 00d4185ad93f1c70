from filltune.management.stage_command import StageCommand
from filltune.pipeline import FIELD_FILE


class Command(StageCommand):
    help = 'Sample the similarity field of the configured oracle over a Latin hypercube'

    def run_stage(self, run, **options):
        count = run.sample()
        if count is None:
            self.stdout.write(self.style.WARNING(
                f'Oracle "{run.config.oracle.kind}" has no field to sample, skipping'
            ))
            return
        self.stdout.write(self.style.SUCCESS(f'Sampled {count} points into {run.path(FIELD_FILE)}'))
