"""Price-advertising path probing and hop-by-hop micropayments over an NDN-style network."""

from .consumer import (
    BanditState,
    Consumer,
    PathStats,
    PricedPath,
    UtilityModel,
    build_content_interest,
    launch_probes,
    measured_v,
    path_cost,
    predict_v,
    register_path,
    select_path,
    update_estimate,
    utility,
)
from .forwarding import Node, Role, on_data, on_interest, probe_next_face, produce_data
from .ledger import Ledger, Verdict
from .model import Name, Packet, PacketKind, PathTag, PerfMetric, TagItem, Window
from .payments import (
    Channel,
    ChannelBook,
    CommitmentTx,
    PaymentEnvelope,
    accept_payment,
    make_payment,
    open_channel,
    split_and_forward,
)
from .pricing import PriceSchedule, detect_conflict
from .signing import Identity, sign_item, signed, verify_item

__version__ = "0.1.0"
