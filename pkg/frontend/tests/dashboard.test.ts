import { describe, expect, it } from "vitest";

import { parseRaw } from "../src/rawJson.js";
import { dashboardView } from "../src/views/dashboard.js";

const RECORD = '{"schema":1,"id":"demo","owner":"desk","version":2,' +
  '"capital":10000.0000,"invested":40000.0000,' +
  '"positions":[{"asset":"ISP","amount":6000.0,"leverage":1.0},' +
  '{"option":{"underlying":"IGV","kind":"put","strike":0.8500,' +
  '"expiry_years":0.8333,"rate":0.1,"vol_annual":0.5458},' +
  '"amount":10000.0}],' +
  '"policy":{"alpha":0.001,"h":0.2,"method":"normal"},' +
  '"margin_factor":0.2454,"availability":185.0810,' +
  '"risk":{"portfolio_var":0.06503158982730389,"margin_factor":0.2454,' +
  '"availability":185.0810,"weights":{"ISP":0.15,"IGV.put@0.85":0.25}}}';

describe("dashboard view-model", () => {
  it("carries the record's fields with server formatting", () => {
    const view = dashboardView(parseRaw(RECORD));
    expect(view.id).toBe("demo");
    expect(view.version).toBe(2);
    expect(view.capital).toBe("10000.0000");
    expect(view.marginFactor).toBe("0.2454");
    expect(view.availability).toBe("185.0810");
    expect(view.portfolioVar).toBe("0.06503158982730389");
    expect(view.blockingAlert).toBe(false);
  });

  it("labels asset and option positions", () => {
    const view = dashboardView(parseRaw(RECORD));
    expect(view.positions.map((p) => p.label)).toEqual(
      ["ISP", "IGV put @ 0.8500"]);
    expect(view.weights.map((w) => w.label)).toEqual(
      ["ISP", "IGV.put@0.85"]);
  });

  it("raises the blocking alert on negative availability", () => {
    const text = RECORD.replace('"availability":185.0810,"risk"',
                                '"availability":-42.0000,"risk"');
    const view = dashboardView(parseRaw(text));
    expect(view.availability).toBe("-42.0000");
    expect(view.blockingAlert).toBe(true);
  });

  it("tolerates a missing live-risk section", () => {
    const text = RECORD.replace(/"risk":\{.*\}\}/, '"risk":null,' +
      '"risk_error":"no price series for IGV"}');
    const view = dashboardView(parseRaw(text));
    expect(view.portfolioVar).toBeNull();
    expect(view.riskError).toContain("IGV");
  });
});
