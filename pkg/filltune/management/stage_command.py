"""
Shared base for the pipeline management commands.

Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from filltune.config import load_config
from filltune.exceptions import ConfigError, StageError
from filltune.pipeline import PipelineRun

CONFIG_ERROR_EXIT = 2
STAGE_ERROR_EXIT = 3


class StageCommand(BaseCommand):
    """Loads the config, builds a PipelineRun and maps toolkit errors to exit codes"""

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            required=True,
            help='Path to the pipeline configuration (JSON)',
        )
        parser.add_argument(
            '--seed',
            type=int,
            default=None,
            help='Override the seed from the configuration',
        )
        parser.add_argument(
            '--workers',
            type=int,
            default=None,
            help='Maximum number of concurrent workers (default: FILLTUNE_WORKERS)',
        )
        parser.add_argument(
            '--out',
            default=None,
            help='Output directory (default: config output_dir, then FILLTUNE_OUTPUT_DIR)',
        )

    def handle(self, *args, **options):
        try:
            config = load_config(options['config'], seed=options['seed'])
            output_dir = options['out'] or config.output_dir or settings.FILLTUNE_OUTPUT_DIR
            workers = options['workers'] if options['workers'] is not None else settings.FILLTUNE_WORKERS
            if workers < 1:
                raise ConfigError(f'--workers must be at least 1, got {workers}')
            run = PipelineRun(config, output_dir, workers)
            self.run_stage(run, **options)
        except ConfigError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR_EXIT) from exc
        except StageError as exc:
            raise CommandError(str(exc), returncode=STAGE_ERROR_EXIT) from exc

    def run_stage(self, run, **options):
        raise NotImplementedError('subclasses of StageCommand must provide a run_stage() method')

    def report_dataset(self, dataset, path):
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(dataset)} points to {path}'))
        if dataset.shortfall:
            self.stdout.write(self.style.WARNING(
                f'Only {len(dataset)} distinct roughness maxima found ({dataset.shortfall} short)'
            ))
        fraction = dataset.valid_fraction
        if fraction is not None:
            self.stdout.write(f'Valid decodes: {fraction:.1%}')
