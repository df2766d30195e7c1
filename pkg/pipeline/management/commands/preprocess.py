from pipeline.commands import StageCommand, add_corpus_arguments
from pipeline.stages import run_preprocess


class Command(StageCommand):
    help = "Ingest ratings and reviews, apply the k-core filter and build TF-IDF item content"
    stage = 'preprocess'
    argument_groups = (add_corpus_arguments,)

    def run_stage(self, config, run):
        return run_preprocess(config, run=run)
