#!/usr/bin/env python3
"""The HTTP service end to end: upload prices, what-if, commit, simulate.

Runs the service in-process (no sockets needed), drives the same workflow
the operator console uses, and shows the matching CLI invocations.
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from riskengine.service import create_app
from _data import price_csvs

data_dir = Path(tempfile.mkdtemp(prefix="risk-demo-"))
app = create_app(data_dir)
client = TestClient(app)

print("=== 1. Load market data ===")
for asset, text in price_csvs().items():
    r = client.put(f"/v1/assets/{asset}/prices", content=text)
    print(f"PUT /v1/assets/{asset}/prices -> {r.status_code}")

print("\n=== 2. Create a portfolio ===")
r = client.post("/v1/portfolios", json={
    "id": "desk-demo", "owner": "operator",
    "capital": 10_000,
    "positions": [{"asset": "ISP", "amount": 6000},
                  {"asset": "IGV", "amount": 21000},
                  {"asset": "GEN", "amount": 3000}],
    "policy": {"alpha": 0.001, "h": 0.2, "method": "normal"},
})
record = r.json()
print(f"POST /v1/portfolios -> {r.status_code}, version {record['version']}, "
      f"a {record['margin_factor']}, M {record['availability']}")

print("\n=== 3. Risk report ===")
r = client.get("/v1/portfolios/desk-demo/risk",
               params={"alpha": 0.01, "method": "monte_carlo",
                       "seed": 1, "m": 100_000})
body = r.json()
print(f"GET /risk -> var {body['var']:.5f}, es {body['es']:.5f} "
      f"({body['method']}, window {body['model_window']})")

print("\n=== 4. What-if, then commit ===")
trade = {"trade": {"asset": "ENI", "amount": 10_000}}
w = client.post("/v1/portfolios/desk-demo/whatif", json=trade).json()
print(f"what-if ENI $10,000: allowed={w['allowed']}, "
      f"a* {w['new_margin_factor']}, M {w['new_availability']}")
c = client.post("/v1/portfolios/desk-demo/trades",
                json={**trade, "expected_version": w["current_version"]})
print(f"commit -> {c.status_code}, version {c.json()['current_version']}")

stale = client.post("/v1/portfolios/desk-demo/trades",
                    json={**trade, "expected_version": 1})
print(f"replaying the stale commit -> {stale.status_code} (version conflict)")

print("\n=== 5. EOD simulation ===")
r = client.post("/v1/portfolios/desk-demo/simulate",
                json={"method": "monte_carlo", "m": 200_000, "seed": 5})
sim = r.json()
q = sim["availability"]["quantiles"]
print(f"availability quantiles: {json.dumps(q)}")
print(f"h_emp diagnostic: {sim['availability']['h_emp']:.4f}")

print("\n=== 6. The audit trail ===")
log = (data_dir / "events.jsonl").read_text().splitlines()
print(f"{len(log)} events in {data_dir}/events.jsonl; the last one:")
last = json.loads(log[-1])
print(f"  seq {last['seq']}: {last['kind']} on {last['portfolio_id']}")

print("""
Equivalent CLI commands (same engine, same numbers):
  risk var    --prices PRICES/ --portfolio pf.json --alpha 0.01 --method monte_carlo --seed 1
  risk margin --prices PRICES/ --portfolio pf.json --trade eni.json
  risk serve  --port 8000 --data-dir ./risk-data
""")
