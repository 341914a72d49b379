// App bootstrap: canvas map, pan/zoom, URL-fragment state sync, search with
// topic proposal boxes and a paper result list, entity info panel with clone
// indicator lines, and multi-select CSV export.

import { ApiClient } from "./api.js";
import { Camera, FlyAnimation, flyFrame } from "./camera.js";
import { render, RenderState } from "./render.js";
import { SelectionModel } from "./selection.js";
import { EntityDetail, MapPayload, MapTopic } from "./types.js";
import { decodeView, displayDepth, encodeView } from "./viewState.js";

const URL_SYNC_DEBOUNCE_MS = 250;
const FLY_DURATION_MS = 650;

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const searchBox = document.getElementById("search") as HTMLInputElement;
const proposalBar = document.getElementById("proposals") as HTMLDivElement;
const resultList = document.getElementById("results") as HTMLUListElement;
const infoPanel = document.getElementById("info") as HTMLDivElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;
const basketLabel = document.getElementById("basket") as HTMLSpanElement;
const altSlider = document.getElementById("altitude") as HTMLInputElement;

const api = new ApiClient();
const selection = new SelectionModel();

let camera: Camera | null = null;
let payload: MapPayload | null = null;
let maxDepth = 1;
let clickedInstance: string | null = null;
let animation: (FlyAnimation & { startedAt: number }) | null = null;
let urlTimer: number | undefined;

function viewport() {
  return { width: canvas.width, height: canvas.height };
}

function resize() {
  canvas.width = canvas.clientWidth * devicePixelRatio;
  canvas.height = canvas.clientHeight * devicePixelRatio;
  draw();
}

function currentDepth(): number {
  return camera ? displayDepth(camera.view.alt, maxDepth) : 1;
}

async function ensurePayload() {
  const depth = currentDepth();
  if (payload && payload.depth === depth) return;
  const next = await api.fetchMap(depth);
  if (next && next.depth === currentDepth()) {
    payload = next;
    maxDepth = next.maxDepth;
    draw();
  }
}

function draw() {
  if (!camera) return;
  const state: RenderState = {
    payload,
    depth: currentDepth(),
    highlights: selection.highlights(),
    indicatorLines: clickedInstance ? selection.indicatorLines(clickedInstance) : [],
    selectedEntity: selection.selected,
  };
  render(ctx, camera, viewport(), state);
}

function scheduleUrlSync() {
  if (!camera) return;
  window.clearTimeout(urlTimer);
  urlTimer = window.setTimeout(() => {
    history.replaceState(null, "", "#" + encodeView(camera!.view));
  }, URL_SYNC_DEBOUNCE_MS);
}

function applyFragment() {
  if (!camera || !location.hash) return;
  try {
    camera.view = decodeView(location.hash);
  } catch {
    // malformed shared fragments are ignored rather than breaking the app
  }
}

function onViewChanged() {
  altSlider.value = String(camera ? camera.view.alt : 1);
  scheduleUrlSync();
  void ensurePayload();
  draw();
}

function flyTo(target: { cx: number; cy: number; r: number }) {
  if (!camera) return;
  animation = {
    from: { ...camera.view },
    to: camera.flyTarget(target),
    durationMs: FLY_DURATION_MS,
    startedAt: performance.now(),
  };
  requestAnimationFrame(stepAnimation);
}

function stepAnimation(now: number) {
  if (!animation || !camera) return;
  const elapsed = now - animation.startedAt;
  camera.view = flyFrame(animation, elapsed);
  onViewChanged();
  if (elapsed < animation.durationMs) {
    requestAnimationFrame(stepAnimation);
  } else {
    animation = null;
  }
}

function toast(message: string) {
  const el = document.getElementById("toast")!;
  el.textContent = message;
  el.classList.add("visible");
  window.setTimeout(() => el.classList.remove("visible"), 2500);
}

// --- selection / info panel ------------------------------------------------

function renderInfoPanel(detail: EntityDetail | null) {
  if (!detail) {
    infoPanel.classList.remove("open");
    infoPanel.innerHTML = "";
    return;
  }
  const topics = detail.instances
    .map((i) => `<span class="badge">${i.topicId.split("/").pop()} · L${i.level}</span>`)
    .join(" ");
  const link = detail.url
    ? `<a href="${detail.url}" target="_blank" rel="noopener">full text</a>`
    : "";
  infoPanel.innerHTML = `
    <button class="close" id="close-info">×</button>
    <h2>${escapeHtml(detail.title)}</h2>
    <p class="meta">${escapeHtml(detail.authors.join("; "))} · ${detail.year}
      ${detail.venue ? " · " + escapeHtml(detail.venue) : ""} ${link}</p>
    <p class="abstract">${escapeHtml(detail.abstract)}</p>
    <div class="badges">${topics}</div>
    <button id="add-export">add to export</button>
  `;
  infoPanel.classList.add("open");
  document.getElementById("close-info")!.addEventListener("click", () => {
    selection.clear();
    clickedInstance = null;
    renderInfoPanel(null);
    draw();
  });
  document.getElementById("add-export")!.addEventListener("click", () => {
    selection.addToExport(detail.id);
    refreshBasket();
  });
}

function escapeHtml(text: string): string {
  const div = document.createElement("div");
  div.textContent = text;
  return div.innerHTML;
}

async function selectEntity(entityId: string, viaInstance: string | null) {
  const selected = selection.toggle(entityId);
  if (!selected) {
    clickedInstance = null;
    renderInfoPanel(null);
    draw();
    return;
  }
  const detail = await api.entity(entityId);
  if (!detail) {
    toast(`entity ${entityId} not found`);
    selection.clear();
    return;
  }
  selection.detail = detail;
  clickedInstance = viaInstance ?? detail.instances[0]?.id ?? null;
  renderInfoPanel(detail);
  draw();
}

function hitTestInstance(px: number, py: number): string | null {
  if (!payload || !camera) return null;
  const scale = camera.scale(viewport());
  let best: { id: string; d: number } | null = null;
  for (const inst of payload.instances) {
    const [sx, sy] = camera.worldToScreen(inst.circle.cx, inst.circle.cy, viewport());
    const d = Math.hypot(sx - px, sy - py);
    const radius = Math.max(inst.circle.r * scale, 2) + 4;
    if (d <= radius && (!best || d < best.d)) best = { id: inst.id, d };
  }
  return best ? best.id : null;
}

// --- search -----------------------------------------------------------------

function renderProposals(topics: MapTopic[] | { topicId: string; label: string; level: number }[]) {
  proposalBar.innerHTML = "";
  for (const topic of topics as { topicId: string; label: string; level: number }[]) {
    const box = document.createElement("button");
    box.className = "proposal";
    box.textContent = `${topic.label} (L${topic.level})`;
    box.addEventListener("click", () => {
      const circle = topicCircle(topic.topicId);
      if (circle) flyTo(circle);
    });
    proposalBar.appendChild(box);
  }
}

function topicCircle(topicId: string) {
  const topic = payload?.topics.find((t) => t.id === topicId);
  return topic ? topic.circle : null;
}

async function runSearch(query: string) {
  proposalBar.innerHTML = "";
  resultList.innerHTML = "";
  if (!query.trim()) return;
  const result = await api.search(query.trim());
  if (!result.topics.length && !result.entities.length) {
    resultList.innerHTML = '<li class="empty">no results</li>';
    return;
  }
  renderProposals(result.topics);
  for (const hit of result.entities) {
    const item = document.createElement("li");
    item.innerHTML = `<span class="title">${escapeHtml(hit.title)}</span>
      <span class="year">${hit.year || ""}</span>`;
    item.addEventListener("click", () => {
      void selectEntity(hit.entityId, null);
    });
    resultList.appendChild(item);
  }
}

// --- export ------------------------------------------------------------------

function refreshBasket() {
  const ids = selection.exportIds();
  basketLabel.textContent = ids.length ? `${ids.length} selected` : "";
  exportButton.disabled = !selection.exportEnabled;
}

async function downloadExport() {
  const text = await selection.exportSelection((ids) => api.exportCsv(ids));
  const blob = new Blob([text], { type: "text/csv" });
  const anchor = document.createElement("a");
  anchor.href = URL.createObjectURL(blob);
  anchor.download = "knowmap-export.csv";
  anchor.click();
  URL.revokeObjectURL(anchor.href);
}

// --- event wiring -------------------------------------------------------------

async function start() {
  const first = await api.fetchMap(1);
  if (!first) {
    toast("map service unavailable");
    return;
  }
  payload = first;
  maxDepth = first.maxDepth;
  camera = new Camera(first.worldRadius);
  applyFragment();
  resize();
  onViewChanged();

  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  let moved = false;

  canvas.addEventListener("mousedown", (e) => {
    dragging = true;
    moved = false;
    lastX = e.clientX;
    lastY = e.clientY;
  });
  window.addEventListener("mouseup", (e) => {
    if (dragging && !moved) {
      const rect = canvas.getBoundingClientRect();
      const px = (e.clientX - rect.left) * devicePixelRatio;
      const py = (e.clientY - rect.top) * devicePixelRatio;
      const instanceId = hitTestInstance(px, py);
      if (instanceId) {
        const inst = payload!.instances.find((i) => i.id === instanceId)!;
        void selectEntity(inst.entityId, instanceId);
      }
    }
    dragging = false;
  });
  window.addEventListener("mousemove", (e) => {
    if (!dragging || !camera) return;
    const dx = (e.clientX - lastX) * devicePixelRatio;
    const dy = (e.clientY - lastY) * devicePixelRatio;
    if (Math.abs(dx) + Math.abs(dy) > 2) moved = true;
    lastX = e.clientX;
    lastY = e.clientY;
    camera.pan(dx, dy, viewport());
    onViewChanged();
  });
  canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    if (!camera) return;
    const rect = canvas.getBoundingClientRect();
    const px = (e.clientX - rect.left) * devicePixelRatio;
    const py = (e.clientY - rect.top) * devicePixelRatio;
    camera.zoomAt(-e.deltaY * 0.0012, px, py, viewport());
    onViewChanged();
  });

  altSlider.addEventListener("input", () => {
    camera?.setAltitude(Number(altSlider.value));
    onViewChanged();
  });

  let searchTimer: number | undefined;
  searchBox.addEventListener("input", () => {
    window.clearTimeout(searchTimer);
    searchTimer = window.setTimeout(() => void runSearch(searchBox.value), 200);
  });

  exportButton.addEventListener("click", () => void downloadExport());

  window.addEventListener("hashchange", () => {
    applyFragment();
    onViewChanged();
  });
  window.addEventListener("resize", resize);
  refreshBasket();
}

void start();
