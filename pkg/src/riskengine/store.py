"""Event-sourced persistence for the risk service.

Every committed mutation is one line in an append-only JSON-lines log;
replaying the log from an empty store reproduces the state byte for byte
(trade outcomes are recomputed through the same pure engine code, never
trusted from the event payload).  A snapshot of the canonical state is
rewritten after each append; approve/deny decisions are all auditable
from the log alone.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import jsonio
from .errors import RiskEngineError
from .margining import (
    AssetPosition,
    MarginAccount,
    MarginPolicy,
    MarketView,
    OptionPosition,
    Position,
    TradeDecision,
    evaluate_trade,
)
from .marketdata import load_prices
from .portfolios import Market, build_market, parse_policy, parse_position

EV_CREATED = "created"
EV_PRICES_LOADED = "prices_loaded"
EV_TRADE_COMMITTED = "trade_committed"
EV_TRADE_DENIED = "trade_denied"
EV_POLICY_CHANGED = "policy_changed"


class NotFound(RiskEngineError):
    pass


class VersionConflict(RiskEngineError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"expected version {expected}, store has {actual}")
        self.expected = expected
        self.actual = actual


class ReplayError(RiskEngineError):
    pass


def position_to_dict(p: Position) -> dict:
    if isinstance(p, AssetPosition):
        return {
            "asset": p.asset_id,
            "amount": p.amount,
            "leverage": p.leverage,
        }
    s = p.spec
    return {
        "option": {
            "underlying": s.underlying_id,
            "kind": s.kind,
            "strike": s.strike,
            "expiry_years": s.expiry_years,
            "rate": s.rate,
            "vol_annual": s.vol_annual,
        },
        "amount": p.amount,
    }


def policy_to_dict(p: MarginPolicy) -> dict:
    return {
        "alpha": p.alpha,
        "h": p.h,
        "method": p.var_method,
        "seed": p.seed,
        "scenarios": p.n_scenarios,
    }


def _canonical(obj):
    """Recursively sort mapping keys so serialization is order-independent."""
    if isinstance(obj, dict):
        return {k: _canonical(obj[k]) for k in sorted(obj)}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return obj


@dataclass
class PortfolioState:
    id: str
    owner: str
    version: int
    capital: float
    positions: list[Position]
    policy: MarginPolicy
    margin_factor: float
    availability: float

    def account(self) -> MarginAccount:
        return MarginAccount(
            capital=self.capital,
            positions=tuple(self.positions),
            margin_factor=self.margin_factor,
            availability=self.availability,
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "version": self.version,
            "capital": self.capital,
            "positions": [position_to_dict(p) for p in self.positions],
            "policy": policy_to_dict(self.policy),
            "margin_factor": self.margin_factor,
            "availability": self.availability,
        }


class Store:
    """In-memory state + append-only event log + snapshot, thread-safe.

    Mutations are serialized under one lock (linearizable per portfolio);
    reads never block.
    """

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / "events.jsonl"
        self.snapshot_path = self.data_dir / "snapshot.json"
        self.lock = threading.RLock()
        self.assets: dict[str, str] = {}
        self.portfolios: dict[str, PortfolioState] = {}
        self.next_seq = 1
        if self.log_path.exists():
            self._replay_file()

    # ------------------------------------------------------------------
    # market assembly

    def price_series(self):
        return {a: load_prices(text, a) for a, text in self.assets.items()}

    def market_for(self, assets: list[str], window: int | None = None) -> Market:
        series = self.price_series()
        return build_market(series, assets, window)

    @staticmethod
    def assets_of(positions, extra: list[str] | None = None) -> list[str]:
        seen: dict[str, None] = {}
        for p in positions:
            if isinstance(p, AssetPosition):
                seen.setdefault(p.asset_id)
            else:
                seen.setdefault(p.spec.underlying_id)
        for a in extra or []:
            seen.setdefault(a)
        return list(seen)

    # ------------------------------------------------------------------
    # state transitions (pure given current state; shared by live + replay)

    def _apply(self, kind: str, portfolio_id: str | None, payload: dict) -> None:
        if kind == EV_PRICES_LOADED:
            self.assets[payload["asset_id"]] = payload["csv"]
            return
        if kind == EV_CREATED:
            spec = payload["portfolio"]
            pid = spec["id"]
            if pid in self.portfolios:
                raise ReplayError(f"portfolio {pid} already exists")
            policy = parse_policy(spec["policy"])
            capital = float(spec["capital"])
            requests = [parse_position(e) for e in spec.get("positions", [])]
            positions: list[Position] = []
            a = 0.0
            m = capital
            if requests:
                market = self.market_for(self._request_assets(requests))
                positions = [r.resolve(market.model, market.spots) for r in requests]
                decision = evaluate_trade(
                    MarginAccount(capital, tuple(positions), 0.0, capital),
                    None, policy, self._market_view(market),
                )
                if not decision.allowed:
                    raise ReplayError(
                        f"initial positions of {pid} fail the margin check "
                        f"(M = {decision.availability:.4f})"
                    )
                a, m = decision.margin_factor, decision.availability
            self.portfolios[pid] = PortfolioState(
                id=pid, owner=spec["owner"], version=1, capital=capital,
                positions=positions, policy=policy,
                margin_factor=a, availability=m,
            )
            return
        if kind == EV_TRADE_COMMITTED:
            state = self.portfolios[portfolio_id]
            decision, position = self._evaluate(state, payload["trade"])
            if not decision.allowed:
                raise ReplayError(
                    f"logged committed trade on {portfolio_id} re-evaluates "
                    f"as denied"
                )
            if position is not None:
                state.positions.append(position)
            state.margin_factor = decision.margin_factor
            state.availability = decision.availability
            state.version += 1
            return
        if kind == EV_TRADE_DENIED:
            return  # audit record only; denied trades change nothing
        if kind == EV_POLICY_CHANGED:
            state = self.portfolios[portfolio_id]
            state.policy = parse_policy(payload["policy"])
            state.version += 1
            return
        raise ReplayError(f"unknown event kind {kind!r}")

    @staticmethod
    def _request_assets(requests) -> list[str]:
        seen: dict[str, None] = {}
        for r in requests:
            seen.setdefault(r.asset if r.asset is not None else r.option.underlying)
        return list(seen)

    @staticmethod
    def _market_view(market: Market) -> MarketView:
        return MarketView(
            model=market.model,
            spots=market.spots,
            scenarios=market.historical,
        )

    def _evaluate(self, state: PortfolioState, trade: dict | None
                  ) -> tuple[TradeDecision, Position | None]:
        """Run the margin check for a portfolio with an optional new trade."""
        request = parse_position(trade) if trade else None
        extra = self._request_assets([request]) if request else []
        assets = self.assets_of(state.positions, extra)
        market = self.market_for(assets)
        position = (request.resolve(market.model, market.spots)
                    if request is not None else None)
        decision = evaluate_trade(
            state.account(), position, state.policy,
            self._market_view(market),
        )
        return decision, position

    # ------------------------------------------------------------------
    # log + snapshot plumbing

    def append(self, kind: str, portfolio_id: str | None, payload: dict) -> int:
        """Apply and durably record one event; returns its sequence number."""
        with self.lock:
            self._apply(kind, portfolio_id, payload)
            seq = self.next_seq
            record = {
                "seq": seq,
                "ts": datetime.now(timezone.utc).isoformat(),
                "portfolio_id": portfolio_id,
                "kind": kind,
                "payload": payload,
            }
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(jsonio.dumps(_canonical(record)) + "\n")
            self.next_seq = seq + 1
            self.write_snapshot()
            return seq

    def _replay_file(self) -> None:
        import json as _json

        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = _json.loads(line)
                if record["seq"] != self.next_seq:
                    raise ReplayError(
                        f"event log gap: found seq {record['seq']}, "
                        f"expected {self.next_seq}"
                    )
                self._apply(record["kind"], record["portfolio_id"],
                            record["payload"])
                self.next_seq += 1

    def canonical_state(self) -> dict:
        return _canonical({
            "assets": dict(self.assets),
            "portfolios": {pid: s.to_dict() for pid, s in self.portfolios.items()},
        })

    def state_bytes(self) -> bytes:
        return jsonio.dumps(self.canonical_state()).encode("utf-8")

    def state_hash(self) -> str:
        return hashlib.sha256(self.state_bytes()).hexdigest()

    def write_snapshot(self) -> None:
        body = jsonio.dumps(_canonical({
            "last_seq": self.next_seq - 1,
            "state": self.canonical_state(),
        }))
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(body, encoding="utf-8")
        os.replace(tmp, self.snapshot_path)

    # ------------------------------------------------------------------
    # queries

    def get(self, portfolio_id: str) -> PortfolioState:
        try:
            return self.portfolios[portfolio_id]
        except KeyError:
            raise NotFound(f"portfolio {portfolio_id!r} not found") from None

    def require_version(self, state: PortfolioState, expected: int) -> None:
        if state.version != expected:
            raise VersionConflict(expected, state.version)
