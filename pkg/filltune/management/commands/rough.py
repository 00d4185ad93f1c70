from filltune.management.stage_command import StageCommand
from filltune.pipeline import ROUGHNESS_FILE


class Command(StageCommand):
    help = 'Build the roughness surface from the network frustration'

    def run_stage(self, run, **options):
        surface = run.rough()
        self.stdout.write(self.style.SUCCESS(
            f'Wrote roughness surface with {len(surface.components)} components to '
            f'{run.path(ROUGHNESS_FILE)}'
        ))
