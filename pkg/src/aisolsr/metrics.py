"""Evaluation metrics computed from the event trace, plus the stable
on-disk schemas (trace CSV, energy CSV, report JSON, summary text).

Data-plane rows only feed PDR / delay / throughput; control traffic shows
up solely through the energy it burned. Lifetime is the first node death
(simulation end, flagged censored, when nobody dies).
"""

from __future__ import annotations

import io
import json
import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping

TRACE_COLUMNS = ("time", "event", "node", "flow", "packet_seq", "reason")

EVENT_SEND = "send"
EVENT_FORWARD = "forward"
EVENT_DELIVER = "deliver"
EVENT_DROP = "drop"
EVENT_DEATH = "node-death"


class TraceError(ValueError):
    """The trace violates an internal consistency rule (corruption)."""


@dataclass(frozen=True)
class TraceRow:
    time: float
    event: str
    node: int
    flow: int | None = None
    packet_seq: int | None = None
    reason: str | None = None


@dataclass(frozen=True)
class MetricsReport:
    pdr: float | None
    mean_delay: float | None
    delay_samples: int
    throughput_bps: float
    lifetime: float
    lifetime_censored: bool
    sent: int
    received: int
    dropped: dict[str, int] = field(default_factory=dict)
    no_traffic: bool = False


def pdr(sent: int, received: int) -> float | None:
    """Delivered share of sent data packets, in percent; None when no traffic."""
    if received < 0 or sent < 0 or received > sent:
        raise TraceError(f"received {received} exceeds sent {sent}")
    if sent == 0:
        return None
    return received / sent * 100.0


def end_to_end_delay(send_time: float, arrival_time: float) -> float:
    """Arrival minus send, for delivered packets; never negative."""
    if arrival_time < send_time:
        raise TraceError(
            f"arrival {arrival_time} precedes send {send_time} (corrupt trace)"
        )
    return arrival_time - send_time


def throughput(delivered_bytes: int, first_send: float, last_arrival: float) -> float:
    """Delivered payload bits over the first-send .. last-arrival window."""
    if delivered_bytes == 0:
        return 0.0
    window = last_arrival - first_send
    if window <= 0:
        raise TraceError("delivered bytes with a non-positive delivery window")
    return delivered_bytes * 8.0 / window


def network_lifetime(rows: Iterable[TraceRow], sim_time: float) -> tuple[float, bool]:
    """Time of the first node death; (sim_time, censored=True) if none died."""
    deaths = [r.time for r in rows if r.event == EVENT_DEATH]
    if not deaths:
        return sim_time, True
    return min(deaths), False


def compute_report(
    rows: list[TraceRow], packet_size: int, sim_time: float
) -> MetricsReport:
    """Fold the trace into the four headline metrics plus counters."""
    send_times: dict[tuple[int, int], float] = {}
    delays: list[float] = []
    dropped: dict[str, int] = {}
    first_send: float | None = None
    last_arrival: float | None = None
    for row in rows:
        if row.event == EVENT_SEND:
            send_times[(row.flow, row.packet_seq)] = row.time
            if first_send is None:
                first_send = row.time
        elif row.event == EVENT_DELIVER:
            key = (row.flow, row.packet_seq)
            if key not in send_times:
                raise TraceError(f"delivery without send for {key}")
            delays.append(end_to_end_delay(send_times[key], row.time))
            last_arrival = row.time
        elif row.event == EVENT_DROP:
            reason = row.reason or "unknown"
            dropped[reason] = dropped.get(reason, 0) + 1
    sent = len(send_times)
    received = len(delays)
    rate = pdr(sent, received)
    if sent - received != sum(dropped.values()):
        raise TraceError(
            f"drops ({sum(dropped.values())}) do not partition sent-received "
            f"({sent}-{received})"
        )
    if received:
        tput = throughput(received * packet_size, first_send, last_arrival)
    else:
        tput = 0.0
    lifetime, censored = network_lifetime(rows, sim_time)
    return MetricsReport(
        pdr=rate,
        mean_delay=sum(delays) / len(delays) if delays else None,
        delay_samples=len(delays),
        throughput_bps=tput,
        lifetime=lifetime,
        lifetime_censored=censored,
        sent=sent,
        received=received,
        dropped=dict(sorted(dropped.items())),
        no_traffic=sent == 0,
    )


# -- serialization -----------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def trace_to_csv(rows: Iterable[TraceRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for r in rows:
        writer.writerow(
            [_cell(r.time), r.event, r.node, _cell(r.flow), _cell(r.packet_seq), _cell(r.reason)]
        )
    return out.getvalue()


def trace_from_csv(text: str) -> list[TraceRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != TRACE_COLUMNS:
        raise TraceError(f"unexpected trace header: {header!r}")
    rows = []
    for rec in reader:
        if len(rec) != len(TRACE_COLUMNS):
            raise TraceError(f"bad trace row: {rec!r}")
        time_s, event, node, flow, seq, reason = rec
        rows.append(
            TraceRow(
                time=float(time_s),
                event=event,
                node=int(node),
                flow=int(flow) if flow else None,
                packet_seq=int(seq) if seq else None,
                reason=reason or None,
            )
        )
    return rows


def energy_to_csv(checkpoints: Iterable[tuple[float, int, float, float, float]]) -> str:
    """Checkpoints are (time, node, remaining_j, tx_debits_j, rx_debits_j)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("time", "node", "remaining_j", "tx_debits_j", "rx_debits_j"))
    for time_s, node, remaining, tx, rx in checkpoints:
        writer.writerow([_cell(time_s), node, _cell(remaining), _cell(tx), _cell(rx)])
    return out.getvalue()


def report_to_dict(report: MetricsReport, config: Mapping, extra: Mapping | None = None) -> dict:
    doc = {
        "protocol": config["protocol"],
        "seed": config["seed"],
        "config": dict(config),
        "metrics": {
            "pdr": report.pdr,
            "mean_delay": report.mean_delay,
            "delay_samples": report.delay_samples,
            "throughput_bps": report.throughput_bps,
            "lifetime": report.lifetime,
            "lifetime_censored": report.lifetime_censored,
            "no_traffic": report.no_traffic,
        },
        "counters": {
            "sent": report.sent,
            "received": report.received,
            "dropped": report.dropped,
        },
    }
    if extra:
        doc["counters"].update(extra)
    return doc


def report_to_json(report: MetricsReport, config: Mapping, extra: Mapping | None = None) -> str:
    return json.dumps(report_to_dict(report, config, extra), indent=2, sort_keys=True) + "\n"


def summary_text(report: MetricsReport, config: Mapping) -> str:
    def fmt(v, unit=""):
        if v is None:
            return "n/a"
        return f"{v:.4f}{unit}" if isinstance(v, float) else f"{v}{unit}"

    lines = [
        f"protocol      {config['protocol']}",
        f"seed          {config['seed']}",
        f"nodes         {config['node_count']}",
        f"sim time      {fmt(float(config['sim_time']), ' s')}",
        f"sent          {report.sent}",
        f"received      {report.received}",
        f"pdr           {fmt(report.pdr, ' %') if not report.no_traffic else 'no-traffic'}",
        f"mean delay    {fmt(report.mean_delay, ' s')}",
        f"throughput    {fmt(report.throughput_bps, ' bit/s')}",
        f"lifetime      {fmt(report.lifetime, ' s')}"
        + (" (censored)" if report.lifetime_censored else ""),
    ]
    if report.dropped:
        lines.append("drops         " + ", ".join(f"{k}={v}" for k, v in report.dropped.items()))
    return "\n".join(lines) + "\n"
