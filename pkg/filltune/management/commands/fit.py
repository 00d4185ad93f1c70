from filltune.management.stage_command import StageCommand
from filltune.pipeline import SURFACE_FILE


class Command(StageCommand):
    help = 'Fit the thin-plate surface to the similarity field (or write the analytic surface)'

    def run_stage(self, run, **options):
        surface = run.fit()
        self.stdout.write(self.style.SUCCESS(
            f'Wrote {surface.to_dict()["kind"]} surface to {run.path(SURFACE_FILE)}'
        ))
