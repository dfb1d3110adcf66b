"""Scenario execution: mobility ticks, handover signalling and packet relay.

The world advances on a fixed tick for position-dependent conditions
(VMP membership, RSS thresholds, ad-hoc range); everything else
(packets, validation, registration, paging) is event driven.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .ccu import Ccu
from .mobility import SpeedTracker, initial_random_state, position_at, step_random_waypoint
from .naming import LLC, Mdht, PathLocator, llc_route
from .radio import Cell, distance, rss_dbm
from .scenario import CN, Scenario, SessionSpec
from .simcore import Simulator
from .vnl import fsm as F
from .vnl.node import NNMN, Node, ProxyLink, deploy_agent, paging_interval, select_proxy
from .vnl.relay import DtnBuffer, relay_enqueue, relay_flush
from .vnl.tunnel import NetInfRequest, ilctr_wrap, olctr_unwrap

MAX_HOPS = 8
VNL_MODULES = ("handover", "power_management", "data_relay")


@dataclass
class Packet:
    pid: str
    session: str
    src: str
    dst: str
    sent_t: float
    hops: int = 0
    status: str = "in_flight"
    tunnel: object = None


@dataclass
class NodeCtx:
    node: Node
    spec: object
    rw_state: object = None
    speed: SpeedTracker | None = None
    inside: frozenset = frozenset()
    rss: dict = field(default_factory=dict)
    detected: set = field(default_factory=set)
    pending: ProxyLink | None = None
    token: int = 0
    last_cell: str | None = None
    access: str | None = None
    locator: object = None


class World:
    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.sc = scenario
        self.tog = scenario.toggles
        self.lat = scenario.toggles.latencies
        self.sim = Simulator(scenario.master_seed if seed is None else seed)
        self.cells: dict[str, Cell] = {c.bs_id: c for c in scenario.cells}
        self.ccus = {bs: Ccu(c, scenario.deny_list) for bs, c in self.cells.items()}
        self.vmp_cell = {v.vmp_id: c for c in scenario.cells for v in c.vmps}
        self.vmps = {v.vmp_id: v for c in scenario.cells for v in c.vmps}
        res = scenario.resolution
        self.scheme = res.scheme
        self.mdht = Mdht(res.tree, res.level_latencies_s)
        self.packets: dict[str, Packet] = {}
        self.sessions = {s.session_id: s for s in scenario.sessions}
        self.radio_stream = self.sim.register_stream("radio")
        self.probe_stream = self.sim.register_stream("probe")

        self.ctx: dict[str, NodeCtx] = {}
        for spec in sorted(scenario.nodes, key=lambda n: n.node_id):
            traj = spec.trajectory
            node = Node(
                spec.node_id,
                spec.kind,
                traj.initial_position,
                battery=spec.battery,
                activity=spec.activity,
                buffer=DtnBuffer(self.tog.buffer_capacity, self.tog.ttl_s),
                vnl_allowed=self.tog.vnl_enabled,
            )
            c = NodeCtx(node, spec, speed=SpeedTracker(self.tog.speed_window_s))
            if traj.kind == "random_waypoint":
                c.rw_state = initial_random_state(traj, self.sim.register_stream(f"mobility/{spec.node_id}"))
            self.ctx[spec.node_id] = c
        self.order = sorted(self.ctx)

        for kind, handler in {
            "tick": self._on_tick,
            "session_start": self._on_session_start,
            "pkt_send": self._on_pkt_send,
            "pkt_hop": self._on_pkt_hop,
            "pkt_core": self._on_pkt_core,
            "pkt_deliver": self._on_pkt_deliver,
            "validation": self._on_validation,
            "search_retry": self._on_search_retry,
            "reg_confirm": self._on_reg_confirm,
            "loc_update": self._on_loc_update,
            "agent_install": self._on_agent_install,
            "lookup": self._on_lookup,
        }.items():
            self.sim.on(kind, handler)

    # ------------------------------------------------------------------
    def run(self) -> Simulator:
        sim = self.sim
        for nid in self.order:
            self._initial_attach(self.ctx[nid])
        for nid in self.order:
            c = self.ctx[nid]
            sim.schedule("loc_update", {"node": nid, "energy": self.tog.energy_location_update}, 0.0)
            if c.spec.agent_from:
                sim.schedule(
                    "agent_install", {"node": nid, "source": c.spec.agent_from}, self.lat.agent_migration_s
                )
        for s in sorted(self.sessions.values(), key=lambda s: s.session_id):
            if s.start_s <= self.sc.duration_s:
                sim.schedule(
                    "session_start",
                    {"node": s.src, "session": s.session_id, "dst": s.dst, "interval_s": s.interval_s},
                    s.start_s,
                )
        for lk in self.sc.resolution.lookups:
            if lk.t <= self.sc.duration_s:
                sim.schedule("lookup", {"oid": lk.oid, "from": lk.from_access}, lk.t)
        sim.schedule("tick", {"k": 0}, 0.0)
        sim.run_until(self.sc.duration_s)
        in_flight = sum(1 for p in self.packets.values() if p.status == "in_flight")
        sim.log("-", "sim_end", in_flight=in_flight)
        return sim

    # -- radio helpers ----------------------------------------------------
    def _rss(self, cell: Cell, pos) -> float:
        d = max(distance(pos, cell.center), 1e-9)
        value = rss_dbm(cell.radio, d)
        if self.tog.shadowing_sigma_db > 0:
            value += self.radio_stream.gauss(0.0, self.tog.shadowing_sigma_db)
        return value

    def _in_attach_zone(self, c: NodeCtx, cell: Cell) -> bool:
        if self.tog.vrss_mode == "rss":
            return c.rss[cell.bs_id] >= cell.attach_rss_dbm
        return distance(c.node.position, cell.center) <= cell.attach_range_m

    # -- lifecycle ------------------------------------------------------
    def _initial_attach(self, c: NodeCtx) -> None:
        n = c.node
        best = None
        for bs in sorted(self.cells):
            cell = self.cells[bs]
            rss = rss_dbm(cell.radio, max(distance(n.position, cell.center), 1e-9))
            if rss >= cell.rss_min_dbm and (best is None or rss > best[0]):
                best = (rss, bs)
        if best is None:
            n.fsm = F.DetachedRelay(None)
            self.sim.log(n.node_id, "unattached")
            return
        bs = best[1]
        self.ccus[bs].register(n.node_id, 0.0)
        n.fsm = F.Attached(bs)
        self.sim.log(n.node_id, "register", bs=bs, energy=0.0)
        self._publish(c, bs)

    def _locator_for(self, nid: str, bs: str):
        if self.scheme == LLC:
            return PathLocator(self.sc.resolution.core_prefix[bs], (bs, nid))
        return f"node:{nid}"

    def _publish(self, c: NodeCtx, bs: str) -> None:
        access = self.sc.resolution.access_of[bs]
        loc = self._locator_for(c.node.node_id, bs)
        if c.access is None:
            self.mdht.publish(c.node.node_id, loc, access)
            self.sim.log(c.node.node_id, "publish", access=access, locator=loc)
        else:
            new_loc = loc if loc != c.locator else None
            self.mdht.update_on_handover(c.node.node_id, c.access, access, new_loc)
            self.sim.log(c.node.node_id, "resolution_update", old=c.access, new=access, locator=loc)
        c.access, c.locator = access, loc

    # -- tick -----------------------------------------------------------
    def _on_tick(self, sim: Simulator, ev) -> None:
        k = ev.payload["k"]
        now = sim.now
        dt = self.sc.tick_s
        for nid in self.order:
            c = self.ctx[nid]
            n = c.node
            if c.rw_state is not None:
                if k > 0:
                    c.rw_state = step_random_waypoint(c.rw_state, dt, sim.stream(f"mobility/{nid}"))
                n.position = c.rw_state.pos
            else:
                n.position = position_at(c.spec.trajectory, now)
            c.speed.add(now, n.position)
        for nid in self.order:
            self._check_node(self.ctx[nid])
        nxt = round((k + 1) * dt, 9)
        if nxt <= self.sc.duration_s:
            sim.schedule("tick", {"k": k + 1}, nxt)

    def _check_node(self, c: NodeCtx) -> None:
        n = c.node
        pos = n.position
        c.rss = {bs: self._rss(cell, pos) for bs, cell in self.cells.items()}

        # ad-hoc range of the active proxy
        proxy = F.active_proxy(n.fsm)
        if proxy and distance(pos, self.ctx[proxy].node.position) > self.tog.adhoc_range_m:
            self._dispatch(c, F.ProxyLost())

        # VMP membership
        inside = frozenset(v for v, vmp in self.vmps.items() if distance(pos, vmp.center) <= vmp.radius_r)
        if inside != c.inside:
            for vid in sorted(inside - c.inside):
                self.sim.log(n.node_id, "vmp_enter", vmp=vid)
                self._on_vmp_enter(c, vid)
            for vid in sorted(c.inside - inside):
                self.sim.log(n.node_id, "vmp_exit", vmp=vid)
                self._on_vmp_exit(c, vid)
            c.inside = inside

        st = n.fsm
        if isinstance(st, F.Attached) and n.has_vnl:
            cell = self.cells[st.bs]
            if self.tog.vrss_mode == "rss" and st.vmp and c.rss[st.bs] < self.vmps[st.vmp].vrss_min_dbm:
                self._dispatch(c, F.VrssBelowMin("vrss"))
            elif cell.vmps:
                threshold = self._predicted_trigger(c, cell)
                if c.rss[st.bs] < threshold:
                    self._dispatch(c, F.VrssBelowMin("predicted"))

        st = n.fsm
        bs = F.serving_bs(st)
        if bs is not None and c.rss[bs] < self.cells[bs].rss_min_dbm:
            self._dispatch(c, F.RssBelowMin())

        st = n.fsm
        if F.serving_bs(st) is None:
            for bs2 in sorted(self.cells):
                if bs2 not in c.detected and c.rss[bs2] >= self.cells[bs2].rss_min_dbm:
                    c.detected.add(bs2)
                    if isinstance(st, F.DetachedRelay) and n.has_vnl:
                        self.sim.log(n.node_id, "bs_detected", bs=bs2)
                        self._dispatch(c, F.WeakBs2Detected(bs2))
                        st = n.fsm

        if isinstance(st, (F.HoPrepare, F.DetachedRelay, F.ReProxy)):
            best = None
            for bs2 in sorted(self.cells):
                cell = self.cells[bs2]
                if self._in_attach_zone(c, cell) and (best is None or c.rss[bs2] > c.rss[best]):
                    best = bs2
            if best is not None:
                self._dispatch(c, F.EnteredVmp2(best))

    def _predicted_trigger(self, c: NodeCtx, cell: Cell) -> float:
        n = c.node
        ccu = self.ccus[cell.bs_id]
        vmp = min(cell.vmps, key=lambda v: (distance(n.position, v.center), v.vmp_id))
        speed = c.speed.estimate()
        if speed is None:
            speed = self.tog.default_speed_mps
        nxt = ccu.predict_next_cell(n.node_id)
        if nxt is not None:
            neighbor = nxt[0]
        else:
            others = [b for b in self.cells if b != cell.bs_id]
            neighbor = min(others, key=lambda b: (distance(n.position, self.cells[b].center), b)) if others else None
        delay = ccu.average_delay(vmp.vmp_id, neighbor) if neighbor else None
        if delay is None:
            delay = self.tog.default_handoff_delay_s
        return ccu.predicted_rss_trigger(vmp, speed, delay, self.tog.trigger_margin_s)

    def _on_vmp_enter(self, c: NodeCtx, vid: str) -> None:
        n = c.node
        cell = self.vmp_cell[vid]
        st = n.fsm
        if not (isinstance(st, F.Attached) and st.bs == cell.bs_id):
            return
        n.fsm = F.Attached(st.bs, vid)
        ccu = self.ccus[cell.bs_id]
        vmp = self.vmps[vid]
        for nb in sorted(self.cells):
            if nb == cell.bs_id:
                continue
            reachable = distance(vmp.center, self.cells[nb].center) <= self.lat.probe_range_m
            link = None
            if reachable:
                link = self.lat.probe_link_s
                if self.lat.probe_jitter_s > 0:
                    link += self.probe_stream.random() * self.lat.probe_jitter_s
            sample = ccu.probe_handoff_delay(vid, nb, link, self.lat.probe_processing_s)
            if sample is None:
                self.sim.log(n.node_id, "probe_failed", vmp=vid, neighbor=nb)
            else:
                self.sim.log(
                    n.node_id, "probe", vmp=vid, neighbor=nb, delay_s=sample,
                    avg_s=ccu.average_delay(vid, nb), energy=self.tog.energy_signal,
                )
                self._spend(n, self.tog.energy_signal)
        pred = ccu.predict_next_cell(n.node_id)
        self.sim.log(
            n.node_id, "ccu_predict", bs=cell.bs_id,
            next=pred[0] if pred else None, p=pred[1] if pred else None,
            stay_p=ccu.stay_probability(self.sim.now - ccu.open[n.node_id].t_in) if n.node_id in ccu.open else None,
        )

    def _on_vmp_exit(self, c: NodeCtx, vid: str) -> None:
        n = c.node
        st = n.fsm
        if not (isinstance(st, F.Attached) and st.vmp == vid):
            return
        cell = self.vmp_cell[vid]
        outward = distance(n.position, cell.center) > self.vmps[vid].offset_r1
        if self.tog.vrss_mode == "geometric" and outward and n.has_vnl:
            self._dispatch(c, F.VrssBelowMin("vmp_exit"))
        else:
            n.fsm = F.Attached(st.bs, None)

    # -- FSM dispatch ---------------------------------------------------
    def _dispatch(self, c: NodeCtx, event) -> None:
        n = c.node
        old = n.fsm
        new, actions = F.fsm_step(old, event)
        name = type(event).__name__
        if any(isinstance(a, F.LogIgnored) for a in actions):
            self.sim.log(n.node_id, "fsm_ignored", event=name, state=old)
            return
        n.fsm = new
        extra = {"cause": event.cause} if isinstance(event, F.VrssBelowMin) else {}
        self.sim.log(n.node_id, "fsm", event=name, **{"from": old, "to": new}, **extra)
        for a in actions:
            self._act(c, a)

    def _act(self, c: NodeCtx, a) -> None:
        n = c.node
        sim = self.sim
        now = sim.now
        if isinstance(a, F.StartProxySearch):
            if n.has_vnl and c.pending is None:
                self._search(c)
        elif isinstance(a, F.ActivateLink):
            link = c.pending if c.pending and c.pending.proxy == a.proxy else ProxyLink(n.node_id, a.proxy, now)
            link.validated = True
            n.proxy_link = link
            c.pending = None
            sim.log(n.node_id, "link_up", proxy=a.proxy)
        elif isinstance(a, F.TerminateLink):
            if n.proxy_link is not None and n.proxy_link.proxy == a.proxy:
                n.proxy_link = None
            sim.log(n.node_id, "link_down", proxy=a.proxy)
        elif isinstance(a, F.ReleaseFromBs):
            self.ccus[a.bs].record_departure(n.node_id, now)
            c.last_cell = a.bs
            c.detected.clear()
            sim.log(n.node_id, "release", bs=a.bs)
        elif isinstance(a, F.RegisterWith):
            ccu = self.ccus[a.bs]
            ccu.register(n.node_id, now)
            if c.last_cell is not None and c.last_cell != a.bs:
                self.ccus[c.last_cell].note_next_cell(n.node_id, a.bs)
            sim.log(n.node_id, "register_request", bs=a.bs, energy=self.tog.energy_signal)
            self._spend(n, self.tog.energy_signal)
            sim.schedule("reg_confirm", {"node": n.node_id, "bs": a.bs}, now + self.lat.registration_s)
        elif isinstance(a, F.StartBuffering):
            if n.has_vnl:
                sim.log(n.node_id, "buffering")
        elif isinstance(a, F.FlushBuffer):
            self._flush(c)
        elif isinstance(a, F.ScheduleRetry):
            if n.has_vnl:
                sim.schedule("search_retry", {"node": n.node_id, "token": c.token}, now + self.tog.retry_interval_s)
        elif isinstance(a, F.CancelSearch):
            c.pending = None
            c.token += 1

    # -- proxy search / validation -------------------------------------
    def _search(self, c: NodeCtx) -> None:
        n = c.node
        current = F.active_proxy(n.fsm)
        candidates = []
        for nid in self.order:
            other = self.ctx[nid].node
            if nid == n.node_id or F.serving_bs(other.fsm) is None:
                continue
            if F.active_proxy(other.fsm) == n.node_id:
                continue
            candidates.append(other)
        exclude = {current} if current else set()
        chosen = select_proxy(n.position, candidates, self.tog.adhoc_range_m, exclude)
        if chosen is None:
            self.sim.log(n.node_id, "proxy_search_failed")
            self._dispatch(c, F.ProxySearchFailed())
            return
        c.token += 1
        c.pending = ProxyLink(n.node_id, chosen, self.sim.now)
        proxy = self.ctx[chosen].node
        ccu = self.ccus[F.serving_bs(proxy.fsm)]
        latency = self.lat.validation_s
        if not ccu.knows(n.node_id):
            latency += 2 * self.lat.inter_ccu_s
            self.sim.log(chosen, "identity_query", client=n.node_id, energy=0.0)
        self.sim.log(chosen, "validation_request", client=n.node_id, energy=self.tog.energy_signal)
        self._spend(proxy, self.tog.energy_signal)
        self.sim.schedule(
            "validation", {"node": n.node_id, "proxy": chosen, "token": c.token}, self.sim.now + latency
        )

    def _identity_ok(self, proxy_bs: str, client: str) -> bool:
        if any(client in ccu.deny_list for ccu in self.ccus.values()):
            return False
        local = self.ccus[proxy_bs]
        if local.validate_identity(client):
            return True
        return any(ccu.validate_identity(client) for bs, ccu in sorted(self.ccus.items()) if bs != proxy_bs)

    def _on_validation(self, sim: Simulator, ev) -> None:
        p = ev.payload
        c = self.ctx[p["node"]]
        if p["token"] != c.token or c.pending is None or c.pending.proxy != p["proxy"]:
            sim.log(c.node.node_id, "validation_stale", proxy=p["proxy"])
            return
        proxy = self.ctx[p["proxy"]].node
        proxy_bs = F.serving_bs(proxy.fsm)
        ok = (
            proxy_bs is not None
            and proxy.has_vnl
            and distance(c.node.position, proxy.position) <= self.tog.adhoc_range_m
            and self._identity_ok(proxy_bs, c.node.node_id)
        )
        if not ok:
            c.pending = None
            sim.log(c.node.node_id, "proxy_validation_failed", proxy=p["proxy"])
            sim.log(c.node.node_id, "proxy_search_failed")
            self._dispatch(c, F.ProxySearchFailed())
            return
        event = F.ProxyValidated(p["proxy"]) if isinstance(c.node.fsm, F.HoPrepare) else F.NewProxyValidated(p["proxy"])
        self._dispatch(c, event)
        c.pending = None

    def _on_search_retry(self, sim: Simulator, ev) -> None:
        c = self.ctx[ev.payload["node"]]
        st = c.node.fsm
        if ev.payload["token"] != c.token or c.pending is not None:
            return
        needs = (isinstance(st, F.HoPrepare) and st.proxy is None) or (
            isinstance(st, F.DetachedRelay) and st.proxy is None
        )
        if needs and c.node.has_vnl:
            self._search(c)

    def _on_reg_confirm(self, sim: Simulator, ev) -> None:
        c = self.ctx[ev.payload["node"]]
        bs = ev.payload["bs"]
        before = c.node.fsm
        self._dispatch(c, F.RegistrationConfirmed(bs))
        if isinstance(c.node.fsm, F.Attached) and not isinstance(before, F.Attached):
            c.detected.clear()
            self._publish(c, bs)
            # the node may already sit in one of the new cell's VMPs
            for vid in sorted(c.inside):
                if self.vmp_cell[vid].bs_id == bs:
                    c.node.fsm = F.Attached(bs, vid)
                    break

    # -- power management -------------------------------------------------
    def _spend(self, n: Node, units: float) -> None:
        n.battery = max(0.0, n.battery - units)

    def _on_loc_update(self, sim: Simulator, ev) -> None:
        n = self.ctx[ev.payload["node"]].node
        self._spend(n, ev.payload["energy"])
        k = self.tog.idle_multiplier if self.tog.power_mgmt_enabled else 1.0
        floor = self.tog.battery_floor if self.tog.power_mgmt_enabled else -math.inf
        interval = paging_interval(n.activity, n.battery, self.tog.paging_base_interval_s, k, floor)
        nxt = sim.now + interval
        if nxt < self.sc.duration_s:
            sim.schedule("loc_update", {"node": n.node_id, "energy": self.tog.energy_location_update}, nxt)

    def _on_agent_install(self, sim: Simulator, ev) -> None:
        target = self.ctx[ev.payload["node"]].node
        source = self.ctx[ev.payload["source"]].node
        state = {"modules": VNL_MODULES, "source": source.node_id, "adhoc_range_m": self.tog.adhoc_range_m}
        deploy_agent(target, state, sim.now)

    # -- name resolution --------------------------------------------------
    def _on_lookup(self, sim: Simulator, ev) -> None:
        p = ev.payload
        res = self.mdht.resolve(p["oid"], p["from"])
        extra = {}
        if isinstance(res.locator, PathLocator):
            hops, fwd = llc_route(res.locator, self.lat.edge_hop_s)
            extra = {"hops": len(hops), "forward_s": fwd}
        sim.log("-", "resolve", oid=p["oid"], **{"from": p["from"]}, hit=res.hit_level,
                latency_s=res.latency_s, locator=res.locator, **extra)

    # -- packets ----------------------------------------------------------
    def _on_session_start(self, sim: Simulator, ev) -> None:
        s = self.sessions[ev.payload["session"]]
        self._schedule_send(s, 0)

    def _schedule_send(self, s: SessionSpec, k: int) -> None:
        t = s.start_s + k * s.interval_s
        stop = self.sc.duration_s if s.stop_s is None else min(s.stop_s, self.sc.duration_s)
        if t <= stop:
            self.sim.schedule(
                "pkt_send",
                {"node": s.src, "session": s.session_id, "pkt": f"{s.session_id}:{k}", "k": k,
                 "energy": self.tog.energy_packet_tx},
                t,
            )

    def _on_pkt_send(self, sim: Simulator, ev) -> None:
        p = ev.payload
        s = self.sessions[p["session"]]
        pkt = Packet(p["pkt"], s.session_id, s.src, s.dst, sim.now)
        self.packets[pkt.pid] = pkt
        self._spend(self.ctx[s.src].node, p["energy"])
        self._schedule_send(s, p["k"] + 1)
        self._forward(self.ctx[s.src], pkt)

    def _finish(self, pkt: Packet, status: str, node: str, kind: str, **detail) -> None:
        pkt.status = status
        self.sim.log(node, kind, pkt=pkt.pid, session=pkt.session, **detail)

    def _forward(self, c: NodeCtx, pkt: Packet) -> None:
        n = c.node
        sim = self.sim
        pkt.hops += 1
        if pkt.hops > MAX_HOPS:
            self._finish(pkt, "lost", n.node_id, "pkt_drop", reason="hop_limit")
            return
        bs = F.serving_bs(n.fsm)
        if bs is not None:
            up = self.lat.bs_link_s + self.lat.core_s
            if pkt.dst == CN:
                s = self.sessions[pkt.session]
                if not s.cn_netinf and pkt.tunnel is None:
                    outer = PathLocator(self.sc.resolution.core_prefix[bs], ("CN",))
                    pkt.tunnel = ilctr_wrap(NetInfRequest(pkt.pid, pkt.session), outer)
                    sim.log(n.node_id, "tunnel_wrap", pkt=pkt.pid, outer=outer)
                sim.schedule("pkt_deliver", {"node": CN, "pkt": pkt.pid, "session": pkt.session}, sim.now + up)
            else:
                sim.schedule("pkt_core", {"node": "-", "pkt": pkt.pid}, sim.now + up)
            return
        link = n.proxy_link
        if link is not None and link.validated:
            proxy = self.ctx[link.proxy].node
            if proxy.kind == NNMN and pkt.tunnel is None:
                pkt.tunnel = ilctr_wrap(NetInfRequest(pkt.pid, pkt.session), f"node:{proxy.node_id}")
                sim.log(n.node_id, "tunnel_wrap", pkt=pkt.pid, outer=pkt.tunnel.outer_locator)
            sim.schedule("pkt_hop", {"node": link.proxy, "pkt": pkt.pid, "from": n.node_id}, sim.now + self.lat.adhoc_s)
            return
        if n.has_vnl:
            result = relay_enqueue(n.buffer, pkt.pid, sim.now)
            self._expire(n, result.expired)
            if result.accepted:
                sim.log(n.node_id, "pkt_buffer", pkt=pkt.pid, session=pkt.session, depth=len(n.buffer))
            else:
                self._finish(pkt, "lost", n.node_id, "pkt_drop", reason=result.reason)
            return
        self._finish(pkt, "lost", n.node_id, "pkt_drop", reason="no_route")

    def _expire(self, n: Node, entries) -> None:
        for e in entries:
            self._finish(self.packets[e.msg], "expired", n.node_id, "pkt_expire", enqueued=e.enqueue_t)

    def _flush(self, c: NodeCtx) -> None:
        n = c.node
        result = relay_flush(n.buffer, self.sim.now)
        self._expire(n, result.expired)
        if result.delivered or result.expired:
            self.sim.log(n.node_id, "buffer_flush", count=len(result.delivered), expired=len(result.expired))
        for e in result.delivered:
            pkt = self.packets[e.msg]
            self.sim.log(n.node_id, "pkt_unbuffer", pkt=pkt.pid, session=pkt.session, enqueued=e.enqueue_t)
            pkt.hops -= 1
            self._forward(c, pkt)

    def _on_pkt_hop(self, sim: Simulator, ev) -> None:
        c = self.ctx[ev.payload["node"]]
        pkt = self.packets[ev.payload["pkt"]]
        if pkt.tunnel is not None and isinstance(pkt.tunnel.outer_locator, str):
            olctr_unwrap(pkt.tunnel)
            pkt.tunnel = None
            sim.log(c.node.node_id, "tunnel_unwrap", pkt=pkt.pid)
        self._forward(c, pkt)

    def _on_pkt_core(self, sim: Simulator, ev) -> None:
        pkt = self.packets[ev.payload["pkt"]]
        dst = self.ctx[pkt.dst].node
        if F.serving_bs(dst.fsm) is not None:
            delay = self.lat.bs_link_s
        else:
            proxy = F.active_proxy(dst.fsm)
            if proxy is None or dst.proxy_link is None or F.serving_bs(self.ctx[proxy].node.fsm) is None:
                self._finish(pkt, "lost", "-", "pkt_drop", reason="no_route")
                return
            delay = self.lat.bs_link_s + self.lat.adhoc_s
        sim.schedule("pkt_deliver", {"node": pkt.dst, "pkt": pkt.pid, "session": pkt.session}, sim.now + delay)

    def _on_pkt_deliver(self, sim: Simulator, ev) -> None:
        pkt = self.packets[ev.payload["pkt"]]
        if pkt.tunnel is not None:
            olctr_unwrap(pkt.tunnel)
            pkt.tunnel = None
            sim.log(ev.payload["node"], "tunnel_unwrap", pkt=pkt.pid)
        pkt.status = "delivered"


def run_scenario(scenario: Scenario, seed_override: int | None = None):
    """Run one scenario; returns ``(trace_rows, metrics)``."""
    from .metrics import compute_metrics

    world = World(scenario, seed_override)
    sim = world.run()
    return sim.trace, compute_metrics(sim.trace)
