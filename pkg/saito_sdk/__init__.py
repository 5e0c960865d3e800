from saito_sdk.saito_sdk import SAITOSDK, RunConfig, __version__
from saito_sdk.groups import group_spec
from saito_sdk.polycore import Poly, Ring, WeightSystem
from saito_sdk.saito_message import parse, serialize
