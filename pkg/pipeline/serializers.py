from rest_framework import serializers

from corpus.datasets import OUT_OF_MATRIX, SPLIT_KINDS
from corpus.ingest import SEPARATORS
from corpus.synthetic import SyntheticSpec
from hashindex.codes import MAX_BITS
from neuhash.params import NO_CONTENT, VARIANTS

from .runconfig import COLD_START_ERROR, COLD_START_RANDOM


class TrainConfigSerializer(serializers.Serializer):
    learning_rate = serializers.FloatField(default=0.0005)
    batch_size = serializers.IntegerField(min_value=1, default=2000)
    max_epochs = serializers.IntegerField(min_value=0, default=30)
    alpha = serializers.FloatField(min_value=0.0, default=0.001)
    noise_var_init = serializers.FloatField(min_value=0.0, default=1.0)
    noise_decay = serializers.FloatField(default=0.9999)
    adam_beta1 = serializers.FloatField(min_value=0.0, max_value=0.999999, default=0.9)
    adam_beta2 = serializers.FloatField(min_value=0.0, max_value=0.999999, default=0.999)
    adam_epsilon = serializers.FloatField(min_value=0.0, default=1e-8)
    eval_every = serializers.IntegerField(min_value=1, default=1)
    hidden_sizes = serializers.ListField(
        child=serializers.IntegerField(min_value=1),
        allow_empty=True,
        default=[1000, 1000]
    )
    kl_weight = serializers.FloatField(min_value=0.0, default=1.0)

    def validate_learning_rate(self, value):
        if value <= 0:
            raise serializers.ValidationError("learning_rate must be > 0")
        return value

    def validate_noise_decay(self, value):
        if not 0 < value <= 1:
            raise serializers.ValidationError("noise_decay must be in (0, 1]")
        return value


class RunConfigSerializer(serializers.Serializer):
    """
    Validates the merged configuration (file + flags).
    Contradictions between fields are rejected in validate().
    """
    input = serializers.CharField(required=False, allow_null=True, default=None)
    format = serializers.ChoiceField(choices=sorted(SEPARATORS), default='tsv')
    synthetic = serializers.CharField(required=False, allow_null=True, default=None)
    min_user = serializers.IntegerField(min_value=1, default=20)
    min_item = serializers.IntegerField(min_value=1, default=20)
    vocab_size = serializers.IntegerField(min_value=1, default=8000)
    stopwords = serializers.CharField(required=False, allow_null=True, default=None)
    split_kind = serializers.ChoiceField(choices=SPLIT_KINDS, default=SPLIT_KINDS[0])
    test_ratio = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.5)
    val_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.15)
    train_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.5)
    m = serializers.IntegerField(min_value=1, max_value=MAX_BITS, default=32)
    variant = serializers.ChoiceField(choices=VARIANTS, default=VARIANTS[0])
    cold_start_codes = serializers.ChoiceField(choices=[COLD_START_ERROR, COLD_START_RANDOM], default=COLD_START_ERROR)
    seed = serializers.IntegerField(min_value=0, default=0)
    output_dir = serializers.CharField(required=False, allow_blank=True, default='')
    threads = serializers.IntegerField(min_value=1, default=1)
    ks = serializers.ListField(child=serializers.IntegerField(min_value=1), allow_empty=False, default=[2, 6, 10])
    series_window = serializers.IntegerField(min_value=1, default=1000)
    method = serializers.CharField(required=False, allow_null=True, default=None)
    train = TrainConfigSerializer(required=False)
    bench_users = serializers.IntegerField(min_value=1, default=1000)
    bench_items = serializers.ListField(child=serializers.IntegerField(min_value=1), allow_empty=False, default=[1000])
    bench_repetitions = serializers.IntegerField(min_value=1, default=10)

    def validate_synthetic(self, value):
        if value:
            try:
                SyntheticSpec.parse(value)
            except (TypeError, ValueError) as error:
                raise serializers.ValidationError(str(error))
        return value

    def validate_train_fraction(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError("train_fraction must be in (0, 1)")
        return value

    def validate(self, attrs):
        if attrs.get('input') and attrs.get('synthetic'):
            raise serializers.ValidationError("give either input or synthetic, not both")

        # unseen items have no trained embedding row in the no-content variant
        if (
            attrs['variant'] == NO_CONTENT
            and attrs['split_kind'] == OUT_OF_MATRIX
            and attrs['cold_start_codes'] == COLD_START_ERROR
        ):
            raise serializers.ValidationError(
                "variant no_content cannot code out-of-matrix items; "
                "set cold_start_codes=random to use untrained item embeddings"
            )

        if 'train' not in attrs:
            defaults = TrainConfigSerializer(data={})
            defaults.is_valid(raise_exception=True)
            attrs['train'] = defaults.validated_data
        attrs['train'] = dict(attrs['train'])
        attrs['ks'] = sorted(set(attrs['ks']))
        return attrs
