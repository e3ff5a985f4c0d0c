"""Run outputs: the per-window metrics CSV and the JSON summary."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import astuple, dataclass, fields
from typing import Optional

from ..forwarding import Role


@dataclass(frozen=True)
class MetricsRow:
    tick: int
    consumer: str
    path_id: str
    interests_sent: int
    data_received: int
    mean_latency: Optional[float]
    frac_within_threshold: Optional[float]
    cost_spent: int
    v_measured: Optional[float]
    u_measured: Optional[float]


CSV_FIELDS = [f.name for f in fields(MetricsRow)]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "-inf" if value < 0 else "inf"
        return f"{value:.6f}"
    return str(value)


def emit_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([_cell(v) for v in astuple(row)])
    return buf.getvalue()


def build_summary(sim) -> dict:
    ledger = sim.ledger
    nodes = {}
    for node_id, node in sim.nodes.items():
        acct = ledger.account(node_id)
        entry = {
            "role": node.role.value,
            "on_chain_balance": acct.balance,
            "security_deposit": acct.security_deposit,
            "flagged": acct.flagged,
        }
        if node.role is Role.CONSUMER:
            entry["spent"] = node.paid
        else:
            entry.update(revenue=node.revenue, received=node.received, paid=node.paid,
                         kept=node.kept, stranded=node.stranded)
        nodes[node_id] = entry

    consumers = []
    for dem in sim.demands:
        cid = dem.consumer.id
        own = sim.channels.of(cid)
        consumers.append({
            "consumer": cid,
            "prefix": str(dem.spec.prefix),
            "interests_sent": dem.sent,
            "data_received": dem.delivered,
            "spent": dem.spent,
            "paths_discovered": len(dem.known),
            "channel_deposits": sum(ch.deposit_of(cid) for ch in own),
            "residual_channel_balance": sum(ch.balance_of(cid) for ch in own),
        })

    settlements = [{
        "channel": ch.channel_id,
        "party_a": ch.party_a,
        "party_b": ch.party_b,
        "seq": ch.seq,
        "deposit_a": ch.deposit_a,
        "deposit_b": ch.deposit_b,
        "balance_a": ch.balance_a,
        "balance_b": ch.balance_b,
        "status": ch.status,
    } for ch in sim.channels]

    totals = ledger.totals()
    totals["conserved"] = (totals["minted"] == totals["on_chain"] + totals["unburned_deposits"]
                           + totals["escrow"] + totals["burned"])
    totals["consumer_spend"] = sum(n.paid for n in sim.nodes.values() if n.role is Role.CONSUMER)
    totals["revenue"] = sum(n.revenue for n in sim.nodes.values() if n.role is not Role.CONSUMER)

    return {
        "run": {"seed": sim.seed, "ticks": sim.ticks, "window": sim.window},
        "nodes": nodes,
        "consumers": consumers,
        "settlements": settlements,
        "disputes": list(sim.disputes),
        "flagged": ledger.punished(),
        "drops": dict(sorted(sim.drops.items())),
        "events": dict(sorted(sim.events.items())),
        "totals": totals,
    }


def emit_summary(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def format_summary(summary: dict) -> str:
    """Human-readable rendering of a summary dict."""
    out = []
    run = summary["run"]
    out.append(f"run: seed={run['seed']} ticks={run['ticks']} window={run['window']}")
    out.append("")
    out.append(f"{'node':<12}{'role':<10}{'revenue':>10}{'on-chain':>10}{'deposit':>9}  flag")
    for nid, n in summary["nodes"].items():
        rev = n.get("revenue", -n.get("spent", 0))
        out.append(f"{nid:<12}{n['role']:<10}{rev:>10}{n['on_chain_balance']:>10}"
                   f"{n['security_deposit']:>9}  {'*' if n['flagged'] else ''}")
    out.append("")
    for c in summary["consumers"]:
        out.append(f"consumer {c['consumer']} {c['prefix']}: sent={c['interests_sent']} "
                   f"received={c['data_received']} spent={c['spent']}u paths={c['paths_discovered']}")
    if summary["settlements"]:
        out.append("")
        out.append("settlements:")
        for s in summary["settlements"]:
            out.append(f"  {s['channel']:<16} seq={s['seq']:<6} "
                       f"({s['deposit_a']}, {s['deposit_b']}) -> ({s['balance_a']}, {s['balance_b']})")
    if summary["disputes"]:
        out.append("")
        out.append("disputes:")
        for d in summary["disputes"]:
            reason = f" ({d['reason']})" if d["reason"] else ""
            out.append(f"  t={d['tick']} {d['submitter']} vs {d['advertiser']}: {d['verdict']}{reason}")
    if summary["drops"]:
        out.append("")
        out.append("drops: " + ", ".join(f"{k}={v}" for k, v in summary["drops"].items()))
    t = summary["totals"]
    out.append("")
    out.append(f"totals: minted={t['minted']} on_chain={t['on_chain']} deposits={t['unburned_deposits']} "
               f"escrow={t['escrow']} burned={t['burned']} conserved={t['conserved']}")
    return "\n".join(out) + "\n"
