from pipeline.commands import StageCommand, add_train_arguments
from pipeline.stages import run_train


class Command(StageCommand):
    help = "Train hash codes and keep the checkpoint with the best validation NDCG@10"
    stage = 'train'
    argument_groups = (add_train_arguments,)

    def run_stage(self, config, run):
        return run_train(config, run=run)
