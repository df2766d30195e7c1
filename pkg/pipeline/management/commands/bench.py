from pipeline.commands import StageCommand, add_bench_arguments
from pipeline.stages import run_bench


class Command(StageCommand):
    help = "Time all-pairs Hamming scoring against float inner-product scoring"
    stage = 'bench'
    argument_groups = (add_bench_arguments,)

    def run_stage(self, config, run):
        return run_bench(config, run=run)
