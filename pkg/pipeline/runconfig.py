"""
RunConfig: the one effective configuration of a pipeline invocation.

Values come from an optional JSON file, then command-line flags, and are
validated by RunConfigSerializer. The validated dictionary is echoed into
every artifact manifest.
"""
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from django.conf import settings

from corpus.datasets import IN_MATRIX
from neuhash.params import CONTENT_AWARE, NO_CONTENT
from training.trainer import TrainConfig

from .exceptions import ConfigError

# desk-scale synthetic run: `manage.py pipeline --config <this file>`
SYNTHETIC_CONFIG = Path(__file__).resolve().parent / 'configs' / 'synthetic.json'

COLD_START_ERROR = 'error'
COLD_START_RANDOM = 'random'

METHOD_NAMES = {
    CONTENT_AWARE: 'neuhash-cf',
    NO_CONTENT: 'neuhash-cf-no-content',
}

# stage artifact directories under output_dir
STAGE_DIRS = {
    'preprocess': 'dataset',
    'split': 'split',
    'train': 'model',
    'infer': 'codes',
    'eval': 'eval',
    'bench': 'bench',
}


@dataclass
class RunConfig:
    input: Optional[str] = None
    format: str = 'tsv'
    synthetic: Optional[str] = None
    min_user: int = 20
    min_item: int = 20
    vocab_size: int = 8000
    stopwords: Optional[str] = None
    split_kind: str = IN_MATRIX
    test_ratio: float = 0.5
    val_fraction: float = 0.15
    train_fraction: float = 0.5
    m: int = 32
    variant: str = CONTENT_AWARE
    cold_start_codes: str = COLD_START_ERROR
    seed: int = 0
    output_dir: str = ''
    threads: int = 1
    ks: list = field(default_factory=lambda: [2, 6, 10])
    series_window: int = 1000
    method: Optional[str] = None
    train: dict = field(default_factory=dict)
    bench_users: int = 1000
    bench_items: list = field(default_factory=lambda: [1000])
    bench_repetitions: int = 10

    def __post_init__(self):
        if not self.output_dir:
            self.output_dir = str(settings.NEUHASH['ARTIFACT_ROOT'])
        if self.method is None:
            self.method = METHOD_NAMES[self.variant]

    @classmethod
    def from_sources(cls, path=None, overrides=None):
        """File values, then `overrides` (None values ignored), then validation."""
        from .serializers import RunConfigSerializer

        data = {}
        if path:
            try:
                data = json.loads(Path(path).read_text(encoding='utf-8'))
            except (OSError, json.JSONDecodeError) as error:
                raise ConfigError({'config': [str(error)]}) from error
            if not isinstance(data, dict):
                raise ConfigError({'config': ['the config file must hold a JSON object']})
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key == 'train':
                data['train'] = {**data.get('train', {}), **{k: v for k, v in value.items() if v is not None}}
            else:
                data[key] = value

        serializer = RunConfigSerializer(data=data)
        if not serializer.is_valid():
            raise ConfigError(serializer.errors)
        return cls(**serializer.validated_data)

    def stage_dir(self, stage):
        return Path(self.output_dir) / STAGE_DIRS[stage]

    def train_config(self):
        return TrainConfig(**self.train, m=self.m, variant=self.variant, seed=self.seed)

    def to_dict(self):
        values = asdict(self)
        values['train'] = self.train_config().to_dict()
        return values
