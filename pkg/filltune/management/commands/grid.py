from filltune.management.stage_command import StageCommand
from filltune.pipeline import GRID_FILE


class Command(StageCommand):
    help = 'Export a 2-D surface on a regular grid for contour plots'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--surface',
            choices=['fitted', 'roughness'],
            default='fitted',
            help='Which surface to export',
        )
        parser.add_argument(
            '--resolution',
            type=int,
            default=50,
            help='Grid points per axis',
        )

    def run_stage(self, run, **options):
        count = run.grid(options['surface'], options['resolution'])
        self.stdout.write(self.style.SUCCESS(f'Wrote {count} grid rows to {run.path(GRID_FILE)}'))
