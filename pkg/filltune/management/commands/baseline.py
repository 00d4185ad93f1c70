from filltune.management.stage_command import StageCommand
from filltune.pipeline import BASELINE_FILE


class Command(StageCommand):
    help = 'Draw uniformly random latent points in the dataset format'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--k',
            type=int,
            default=None,
            help='Number of points (default: k_select from the configuration)',
        )

    def run_stage(self, run, **options):
        dataset = run.baseline(options['k'])
        self.report_dataset(dataset, run.path(BASELINE_FILE))
