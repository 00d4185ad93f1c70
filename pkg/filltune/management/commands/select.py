from filltune.management.stage_command import StageCommand
from filltune.pipeline import DATASET_FILE


class Command(StageCommand):
    help = 'Select the roughest latent points as the fill-tuning dataset'

    def run_stage(self, run, **options):
        dataset = run.select()
        self.report_dataset(dataset, run.path(DATASET_FILE))
