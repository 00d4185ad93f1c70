from filltune.management.stage_command import StageCommand
from filltune.pipeline import NETWORK_FILE


class Command(StageCommand):
    help = 'Explore the fitted surface into a kinetic transition network'

    def run_stage(self, run, **options):
        net = run.explore()
        self.stdout.write(self.style.SUCCESS(
            f'Found {net.n_minima} minima and {net.n_edges} transition states '
            f'({run.path(NETWORK_FILE)})'
        ))
