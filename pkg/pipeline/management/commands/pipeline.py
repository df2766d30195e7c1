from pipeline.commands import (
    StageCommand,
    add_bench_arguments,
    add_corpus_arguments,
    add_eval_arguments,
    add_split_arguments,
    add_train_arguments,
)
from pipeline.stages import run_pipeline


class Command(StageCommand):
    help = "Run preprocess, split, train, infer, eval and bench in order"
    stage = 'pipeline'
    argument_groups = (
        add_corpus_arguments,
        add_split_arguments,
        add_train_arguments,
        add_eval_arguments,
        add_bench_arguments,
    )

    def run_stage(self, config, run):
        return run_pipeline(config, run=run)
