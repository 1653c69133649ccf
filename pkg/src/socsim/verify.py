"""End-of-run verdicts over the recorded schedule.

Four checks, each returning a dict with a boolean ``pass`` and concrete
evidence for every violation found (capped per check so a broken run
does not produce megabytes of it):

* starvation: nobody waits for a resource longer than the window W,
  after deducting time the waiter spent under its own quota stall
  (the anti-starvation guard bounds that wait separately, by design).
* deadline: every transaction of a master with a declared deadline
  finishes within it, and nothing still in flight has already blown it.
* priority_inversion: under a fixed-priority bus, no grant goes to a
  worse-ranked master while a strictly better-ranked one has been
  waiting longer than one full occupancy.
* quota: per period, a quota master's caused cycles stay within
  limit + max_occ + ceil(period / guard) * max_occ, the slack being one
  in-flight occupancy at the crossing plus one guard grant per window.
"""

from __future__ import annotations

EVIDENCE_CAP = 20


def _max_port_occupancy(port) -> int:
    worst = max(port.occupancy_override.values()) if port.occupancy_override else 1
    for g in port.grants:
        worst = max(worst, g.occupancy)
    return worst


def _starvation_window(system) -> dict[str, int]:
    cfg = system.cfg
    windows = {"bus": 10 * system.bus.occupancy.max_occupancy()}
    for port in system.ports:
        windows[port.resource] = 10 * _max_port_occupancy(port)
    windows["mem"] = 10 * max(cfg.mem_read_latency, cfg.mem_write_latency)
    if cfg.starvation_window is not None:
        windows = {name: cfg.starvation_window for name in windows}
    return windows


def check_starvation(system) -> dict:
    mon = system.monitor
    now = system.sim.now
    windows = _starvation_window(system)
    violations = []

    def note(resource, who, t_request, waited, granted) -> None:
        if len(violations) < EVIDENCE_CAP:
            violations.append({
                "resource": resource, "master": who, "t_request": t_request,
                "waited": waited, "granted": granted})

    def scan_grants(resource, grants):
        w = windows[resource]
        for g in grants:
            waited = (g.t_granted - g.t_request) \
                - mon.stalled_overlap(g.owner, g.t_request, g.t_granted)
            if waited > w:
                note(resource, g.owner, g.t_request, waited, True)

    scan_grants("bus", system.bus.grants)
    for port in system.ports:
        scan_grants(port.resource, port.grants)
    for rec in system.memctrl.records:
        if rec.t_started - rec.t_enqueued > windows["mem"]:
            note("mem", rec.initiator, rec.t_enqueued,
                 rec.t_started - rec.t_enqueued, True)

    # whatever is still waiting at the horizon counts too
    for m, (txn, t_req) in sorted(system.bus.pending.items()):
        waited = (now - t_req) - mon.stalled_overlap(txn.owner, t_req, now)
        if waited > windows["bus"]:
            note("bus", txn.owner, t_req, waited, False)
    for port in system.ports:
        for e in port.entities:
            for txn, t_arr in port.queues[e]:
                waited = (now - t_arr) \
                    - mon.stalled_overlap(txn.owner, t_arr, now)
                if waited > windows[port.resource]:
                    note(port.resource, txn.owner, t_arr, waited, False)
    for initiator, _kind, t_enq in system.memctrl.pending_entries():
        if now - t_enq > windows["mem"]:
            note("mem", initiator, t_enq, now - t_enq, False)

    return {"pass": not violations, "windows": windows,
            "violations": violations}


def check_deadlines(system) -> dict:
    cfg = system.cfg
    now = system.sim.now
    violations = []
    for master, deadline in sorted(cfg.deadlines.items()):
        m = system.masters[master]
        for lat in m.latencies:
            if lat > deadline and len(violations) < EVIDENCE_CAP:
                violations.append({"master": master, "latency": lat,
                                   "deadline": deadline, "completed": True})
        for uid in sorted(m.active):
            age = now - m.active[uid].t_issued
            if age > deadline and len(violations) < EVIDENCE_CAP:
                violations.append({"master": master, "latency": age,
                                   "deadline": deadline, "completed": False})
    return {"pass": not violations,
            "checked": sorted(cfg.deadlines), "violations": violations}


def check_priority_inversion(system, grants=None, ranks=None,
                             max_occupancy=None) -> dict:
    """A better-ranked waiter may be passed over for at most the
    occupancy in flight when it arrived; any longer and the arbiter
    inverted the programmed priority."""
    cfg = system.cfg
    if cfg.bus_policy != "fixed_priority" and grants is None:
        return {"pass": True, "applicable": False, "violations": []}
    if grants is None:
        grants = system.bus.grants
    if ranks is None:
        ranks = dict(cfg.bus_ranks)
    if max_occupancy is None:
        max_occupancy = system.bus.occupancy.max_occupancy()

    def rank_of(slot: int) -> int:
        return ranks.get(slot, slot)

    violations = []
    for g in grants:
        if g.guard:
            continue    # anti-starvation service is sanctioned
        for slot, owner, t_req, stalled in g.waiters:
            if stalled:
                continue
            if rank_of(slot) < rank_of(g.slot) \
                    and g.t_granted - t_req > max_occupancy:
                if len(violations) < EVIDENCE_CAP:
                    violations.append({
                        "t": g.t_granted, "granted": g.slot,
                        "granted_rank": rank_of(g.slot),
                        "passed_over": slot, "passed_over_rank": rank_of(slot),
                        "waited": g.t_granted - t_req})
    return {"pass": not violations, "applicable": True,
            "violations": violations}


def _max_monitored_occupancy(system) -> int:
    mon = system.monitor
    cfg = system.cfg
    worst = 1
    if "bus" in mon.monitored:
        worst = max(worst, system.bus.occupancy.max_occupancy())
    for port in system.ports:
        if port.resource in mon.monitored:
            worst = max(worst, _max_port_occupancy(port))
    if "mem" in mon.monitored:
        worst = max(worst, cfg.mem_read_latency, cfg.mem_write_latency)
    return worst


def check_quota(system) -> dict:
    cfg = system.cfg
    mon = system.monitor
    if not mon.quotas:
        return {"pass": True, "applicable": False, "violations": []}
    max_occ = _max_monitored_occupancy(system)
    guard_terms = -(-cfg.period // cfg.guard_window)    # ceil
    violations = []
    bounds = {}
    for master in sorted(mon.quotas):
        limit = mon.quotas[master].config.limit
        bound = limit + max_occ + guard_terms * max_occ
        bounds[master] = bound
        history = list(mon.period_history[master]) + [mon.used[master]]
        for period, caused in enumerate(history):
            if caused > bound and len(violations) < EVIDENCE_CAP:
                violations.append({"master": master, "period": period,
                                   "caused": caused, "bound": bound})
    return {"pass": not violations, "applicable": True,
            "max_occupancy": max_occ, "bounds": bounds,
            "violations": violations}


def run_checks(system) -> dict:
    verdicts = {
        "starvation": check_starvation(system),
        "deadline": check_deadlines(system),
        "priority_inversion": check_priority_inversion(system),
        "quota": check_quota(system),
    }
    verdicts["pass"] = all(v["pass"] for v in verdicts.values())
    return verdicts
