from pipeline.commands import StageCommand, add_split_arguments
from pipeline.stages import run_split


class Command(StageCommand):
    help = "Split the preprocessed dataset into train/validation/test (in-matrix or out-of-matrix)"
    stage = 'split'
    argument_groups = (add_split_arguments,)

    def run_stage(self, config, run):
        return run_split(config, run=run)
