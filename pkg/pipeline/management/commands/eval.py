from pipeline.commands import StageCommand, add_eval_arguments
from pipeline.stages import run_eval


class Command(StageCommand):
    help = "Rank each user's test items by Hamming distance; write NDCG@k, MRR and per-user series"
    stage = 'eval'
    argument_groups = (add_eval_arguments,)

    def run_stage(self, config, run):
        return run_eval(config, run=run)
