// Canvas renderer. Layers bottom-up: water, contour lines with gradient
// colours, topic circles, edges, instance nodes, then labels. Topic labels
// fade in around their own depth; instance titles appear only near ground
// level.

import { Camera, Viewport } from "./camera.js";
import { IndicatorLine } from "./selection.js";
import { ColorScale, EntityInstanceRef, MapInstance, MapPayload } from "./types.js";

/** Altitude below which instance titles are drawn. */
export const TITLE_ALTITUDE = 0.18;

export type Rgb = [number, number, number];

/** Piecewise-linear colour for an elevation; mirrors the server's scale. */
export function colorFor(elevation: number, scale: ColorScale): Rgb {
  const stops = scale.stops;
  let segment: [number, Rgb][];
  if (elevation < scale.seaLevel) {
    const cut = stops.findIndex(([e]) => e >= scale.seaLevel);
    segment = (cut >= 0 ? stops.slice(0, cut + 1) : stops) as [number, Rgb][];
  } else {
    let cut = 0;
    stops.forEach(([e], i) => {
      if (e <= scale.seaLevel) cut = i;
    });
    segment = stops.slice(cut) as [number, Rgb][];
  }
  if (elevation <= segment[0][0]) return segment[0][1];
  for (let i = 0; i + 1 < segment.length; i++) {
    const [e0, c0] = segment[i];
    const [e1, c1] = segment[i + 1];
    if (elevation <= e1) {
      if (e1 === e0) return c1;
      const t = (elevation - e0) / (e1 - e0);
      return [0, 1, 2].map((ch) => Math.round(c0[ch] + t * (c1[ch] - c0[ch]))) as Rgb;
    }
  }
  return segment[segment.length - 1][1];
}

/** Topic labels at level l show only when the display depth is within one. */
export function topicLabelVisible(level: number, depth: number): boolean {
  return depth >= level - 1 && depth <= level + 1;
}

function css([r, g, b]: Rgb, alpha = 1): string {
  return `rgba(${r},${g},${b},${alpha})`;
}

export interface RenderState {
  payload: MapPayload | null;
  depth: number;
  highlights: EntityInstanceRef[];
  indicatorLines: IndicatorLine[];
  selectedEntity: string | null;
}

export function render(
  ctx: CanvasRenderingContext2D,
  camera: Camera,
  viewport: Viewport,
  state: RenderState
): void {
  const { payload } = state;
  const water = payload
    ? colorFor(0, payload.colorScale)
    : ([13, 41, 84] as Rgb);
  ctx.fillStyle = css(water);
  ctx.fillRect(0, 0, viewport.width, viewport.height);
  if (!payload) return; // water-only map for empty payloads

  const toScreen = (x: number, y: number) => camera.worldToScreen(x, y, viewport);
  const scale = camera.scale(viewport);

  // contour lines, gradient-coloured by iso level
  payload.contours.isoLevels.forEach((iso, idx) => {
    ctx.strokeStyle = css(colorFor(Math.min(iso, 1), payload.colorScale));
    ctx.lineWidth = 1;
    for (const line of payload.contours.lines[idx]) {
      if (line.points.length < 2) continue;
      ctx.beginPath();
      line.points.forEach(([x, y], i) => {
        const [px, py] = toScreen(x, y);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      if (line.closed) ctx.closePath();
      ctx.stroke();
    }
  });

  // topic circles up to the display depth
  for (const topic of payload.topics) {
    const [px, py] = toScreen(topic.circle.cx, topic.circle.cy);
    ctx.beginPath();
    ctx.arc(px, py, topic.circle.r * scale, 0, Math.PI * 2);
    ctx.strokeStyle = `rgba(30,40,50,${topic.level === state.depth ? 0.65 : 0.3})`;
    ctx.lineWidth = topic.level === state.depth ? 1.5 : 1;
    ctx.stroke();
  }

  // similarity and matching edges
  const byId = new Map<string, MapInstance>();
  for (const inst of payload.instances) byId.set(inst.id, inst);
  for (const edge of payload.edges) {
    const a = byId.get(edge.a);
    const b = byId.get(edge.b);
    if (!a || !b) continue;
    const [ax, ay] = toScreen(a.circle.cx, a.circle.cy);
    const [bx, by] = toScreen(b.circle.cx, b.circle.cy);
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    if (edge.kind === "matching") {
      ctx.strokeStyle = "rgba(200,60,60,0.8)";
      ctx.setLineDash([]);
    } else if (edge.kind === "within_topic") {
      ctx.strokeStyle = "rgba(60,140,70,0.5)";
      ctx.setLineDash([]);
    } else {
      ctx.strokeStyle = "rgba(60,140,70,0.35)";
      ctx.setLineDash([4, 3]);
    }
    ctx.lineWidth = Math.min(0.5 + edge.weight * 0.1, 2.5);
    ctx.stroke();
  }
  ctx.setLineDash([]);

  // instance nodes
  const highlighted = new Set(state.highlights.map((h) => h.id));
  for (const inst of payload.instances) {
    const [px, py] = toScreen(inst.circle.cx, inst.circle.cy);
    const radius = Math.max(inst.circle.r * scale, 2);
    ctx.beginPath();
    ctx.arc(px, py, radius, 0, Math.PI * 2);
    ctx.fillStyle =
      inst.kind === "original" ? "rgba(36,90,52,0.9)" : "rgba(58,110,170,0.9)";
    ctx.fill();
    if (highlighted.has(inst.id) || inst.entityId === state.selectedEntity) {
      ctx.beginPath();
      ctx.arc(px, py, radius + 3, 0, Math.PI * 2);
      ctx.strokeStyle = "rgba(250,200,40,0.95)";
      ctx.lineWidth = 2.5;
      ctx.stroke();
    }
  }

  // indicator lines from the clicked instance to its sibling clones
  for (const line of state.indicatorLines) {
    const [ax, ay] = toScreen(line.from.circle.cx, line.from.circle.cy);
    const [bx, by] = toScreen(line.to.circle.cx, line.to.circle.cy);
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.strokeStyle = "rgba(250,200,40,0.9)";
    ctx.setLineDash([6, 4]);
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }
  ctx.setLineDash([]);

  drawLabels(ctx, camera, viewport, state);
}

function drawLabels(
  ctx: CanvasRenderingContext2D,
  camera: Camera,
  viewport: Viewport,
  state: RenderState
): void {
  const payload = state.payload!;
  const placed: { x: number; y: number; w: number }[] = [];

  const tryPlace = (x: number, y: number, w: number): boolean => {
    for (const box of placed) {
      if (Math.abs(box.y - y) < 14 && Math.abs(box.x - x) < (box.w + w) / 2) {
        return false;
      }
    }
    placed.push({ x, y, w });
    return true;
  };

  // higher-level topics get label priority
  const labelled = payload.topics
    .filter((t) => topicLabelVisible(t.level, state.depth))
    .sort((a, b) => a.level - b.level || b.circle.r - a.circle.r);
  ctx.textAlign = "center";
  for (const topic of labelled) {
    const [px, py] = camera.worldToScreen(topic.circle.cx, topic.circle.cy, viewport);
    const size = Math.max(11, 18 - 2 * topic.level);
    ctx.font = `${size}px system-ui, sans-serif`;
    const width = ctx.measureText(topic.label).width;
    if (!tryPlace(px, py, width)) continue;
    ctx.fillStyle = "rgba(25,30,35,0.85)";
    ctx.fillText(topic.label, px, py);
  }

  // instance titles only near the ground
  if (camera.view.alt <= TITLE_ALTITUDE) {
    ctx.font = "10px system-ui, sans-serif";
    ctx.fillStyle = "rgba(20,20,20,0.75)";
    for (const inst of payload.instances) {
      const [px, py] = camera.worldToScreen(inst.circle.cx, inst.circle.cy, viewport);
      const label = inst.entityId;
      const width = ctx.measureText(label).width;
      if (!tryPlace(px, py + 12, width)) continue;
      ctx.fillText(label, px, py + 12);
    }
  }
}
