import { describe, expect, it } from "vitest";

import { SelectionModel } from "../src/selection.js";
import { EntityDetail } from "../src/types.js";

// Mirrors the demo corpus's max-occupancy entity: four leaf topics at level 3,
// plus its induced instances higher up — the shape /api/entity returns.
const MAX_OCCUPANCY_DETAIL: EntityDetail = {
  id: "p0042",
  title: "A heavily cross-filed paper",
  abstract: "Spans four subfields.",
  authors: ["A. Archer", "B. Bellamy"],
  year: 2019,
  venue: null,
  doi: null,
  url: null,
  concepts: ["C0001", "C0002"],
  instances: [
    { id: "p0042::root/A", level: 1, topicId: "root/A", kind: "original", tag: "induced", circle: { cx: 0, cy: 0, r: 1 } },
    { id: "p0042::root/B", level: 1, topicId: "root/B", kind: "clone", tag: "induced", circle: { cx: 5, cy: 0, r: 1 } },
    { id: "p0042::root/A/x", level: 2, topicId: "root/A/x", kind: "original", tag: "induced", circle: { cx: 0, cy: 1, r: 1 } },
    { id: "p0042::root/B/y", level: 2, topicId: "root/B/y", kind: "clone", tag: "induced", circle: { cx: 5, cy: 1, r: 1 } },
    { id: "p0042::root/A/x/1", level: 3, topicId: "root/A/x/1", kind: "original", tag: "direct", circle: { cx: 0, cy: 2, r: 1 } },
    { id: "p0042::root/A/x/2", level: 3, topicId: "root/A/x/2", kind: "clone", tag: "direct", circle: { cx: 1, cy: 2, r: 1 } },
    { id: "p0042::root/B/y/1", level: 3, topicId: "root/B/y/1", kind: "clone", tag: "direct", circle: { cx: 5, cy: 2, r: 1 } },
    { id: "p0042::root/B/y/2", level: 3, topicId: "root/B/y/2", kind: "clone", tag: "direct", circle: { cx: 6, cy: 2, r: 1 } },
  ],
};

function selectMaxOccupancy(): SelectionModel {
  const model = new SelectionModel();
  model.toggle("p0042");
  model.detail = MAX_OCCUPANCY_DETAIL;
  return model;
}

describe("clone fidelity", () => {
  it("highlight count equals the entity-detail instance count", () => {
    const model = selectMaxOccupancy();
    expect(model.highlights().length).toBe(MAX_OCCUPANCY_DETAIL.instances.length);
  });

  it("draws an indicator line from the clicked instance to every other one", () => {
    const model = selectMaxOccupancy();
    const lines = model.indicatorLines("p0042::root/A/x/1");
    expect(lines.length).toBe(MAX_OCCUPANCY_DETAIL.instances.length - 1);
    for (const line of lines) {
      expect(line.from.id).toBe("p0042::root/A/x/1");
      expect(line.to.id).not.toBe("p0042::root/A/x/1");
    }
  });

  it("a single-instance entity gets highlights but no lines", () => {
    const model = new SelectionModel();
    model.toggle("p1");
    model.detail = {
      ...MAX_OCCUPANCY_DETAIL,
      id: "p1",
      instances: [MAX_OCCUPANCY_DETAIL.instances[0]],
    };
    expect(model.highlights().length).toBe(1);
    expect(model.indicatorLines(MAX_OCCUPANCY_DETAIL.instances[0].id)).toEqual([]);
  });

  it("re-clicking the selected entity deselects it", () => {
    const model = selectMaxOccupancy();
    expect(model.selected).toBe("p0042");
    expect(model.toggle("p0042")).toBeNull();
    expect(model.highlights()).toEqual([]);
  });
});

describe("multi-select export", () => {
  function fakeExporter(known: Record<string, string>) {
    return async (ids: string[]) => {
      const lines = ["id,title,authors,year,venue,doi,url"];
      for (const id of ids) {
        if (known[id] !== undefined) {
          lines.push(`${id},${known[id]},,2020,,,`);
        }
      }
      return lines.join("\r\n") + "\r\n";
    };
  }

  it("exporting three selected papers downloads a 4-line CSV", async () => {
    const model = new SelectionModel();
    model.addToExport("p0001");
    model.addToExport("p0002");
    model.addToExport("p0003");
    const csv = await model.exportSelection(
      fakeExporter({ p0001: "One", p0002: "Two", p0003: "Three" })
    );
    const lines = csv.trim().split(/\r?\n/);
    expect(lines.length).toBe(4);
    expect(lines[0]).toBe("id,title,authors,year,venue,doi,url");
  });

  it("duplicate selections collapse to one row", async () => {
    const model = new SelectionModel();
    model.addToExport("p0001");
    model.addToExport("p0001");
    model.addToExport("p0001");
    expect(model.exportIds()).toEqual(["p0001"]);
    const csv = await model.exportSelection(fakeExporter({ p0001: "One" }));
    expect(csv.trim().split(/\r?\n/).length).toBe(2);
  });

  it("export control is disabled while the basket is empty", () => {
    const model = new SelectionModel();
    expect(model.exportEnabled).toBe(false);
    model.addToExport("x");
    expect(model.exportEnabled).toBe(true);
    model.removeFromExport("x");
    expect(model.exportEnabled).toBe(false);
  });

  it("export preserves map-then-list selection order", () => {
    const model = new SelectionModel();
    model.addToExport("from-map-1");
    model.addToExport("from-map-2");
    model.addToExport("from-list-1");
    expect(model.exportIds()).toEqual(["from-map-1", "from-map-2", "from-list-1"]);
  });
});
