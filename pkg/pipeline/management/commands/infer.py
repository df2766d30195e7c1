from pipeline.commands import StageCommand
from pipeline.stages import run_infer


class Command(StageCommand):
    help = "Write deterministic user and item codes of the trained checkpoint to a CodeBook"
    stage = 'infer'

    def run_stage(self, config, run):
        return run_infer(config, run=run)
