import { HttpApiClient } from "./api.js";
import { CanvasTrimapDecoder } from "./decoder.js";
import { actionForKey, runAction } from "./keymap.js";
import { overlayPixels } from "./overlay.js";
import { AnnotationController } from "./store.js";
import { canvasToImage, imageToCanvas, pan, zoomAround, type ViewTransform } from "./transform.js";

const api = new HttpApiClient("");
const controller = new AnnotationController(api, new CanvasTrimapDecoder());

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const toast = document.getElementById("toast")!;
const statusLine = document.getElementById("status")!;
const imageList = document.getElementById("images")!;
const fgButton = document.getElementById("mode-fg") as HTMLButtonElement;
const bgButton = document.getElementById("mode-bg") as HTMLButtonElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const saveButton = document.getElementById("save") as HTMLButtonElement;

let view: ViewTransform = { zoom: 6, panX: 20, panY: 20 };
let baseImage: HTMLImageElement | null = null;
let overlayCanvas: HTMLCanvasElement | null = null;
let bgHeld = false;
let dragging = false;
let dragLast = { x: 0, y: 0 };

function resizeCanvas(): void {
  canvas.width = canvas.clientWidth * devicePixelRatio;
  canvas.height = canvas.clientHeight * devicePixelRatio;
  draw();
}

function loadBaseImage(id: string): void {
  const img = new Image();
  img.onload = () => {
    baseImage = img;
    draw();
  };
  img.src = api.imageUrl(id);
}

function rebuildOverlayCanvas(): void {
  const overlay = controller.state.overlay;
  if (!overlay) {
    overlayCanvas = null;
    return;
  }
  const off = document.createElement("canvas");
  off.width = overlay.width;
  off.height = overlay.height;
  const octx = off.getContext("2d")!;
  const data = new ImageData(overlayPixels(overlay), overlay.width, overlay.height);
  octx.putImageData(data, 0, 0);
  overlayCanvas = off;
}

function draw(): void {
  ctx.save();
  ctx.scale(devicePixelRatio, devicePixelRatio);
  ctx.clearRect(0, 0, canvas.clientWidth, canvas.clientHeight);
  ctx.imageSmoothingEnabled = false;
  const { imageWidth: w, imageHeight: h } = controller.state;
  if (baseImage) {
    ctx.drawImage(baseImage, view.panX, view.panY, w * view.zoom, h * view.zoom);
  }
  if (overlayCanvas) {
    ctx.drawImage(overlayCanvas, view.panX, view.panY, w * view.zoom, h * view.zoom);
  }
  const radius = controller.state.radius;
  for (const p of controller.state.points) {
    const c = imageToCanvas(p, view);
    ctx.strokeStyle = p.kind === "fg" ? "#2ecc40" : "#ff4136";
    ctx.fillStyle = ctx.strokeStyle;
    ctx.beginPath();
    ctx.arc(c.x, c.y, 4, 0, 2 * Math.PI);
    ctx.fill();
    if (radius !== null) {
      ctx.beginPath();
      ctx.setLineDash([6, 4]);
      ctx.arc(c.x, c.y, radius * view.zoom, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }
  ctx.restore();
}

function renderChrome(): void {
  const s = controller.state;
  statusLine.textContent = s.imageId
    ? `${s.imageId}  v${s.version}  ${s.status}  fg:${controller.foregroundPoints().length}` +
      `  bg:${controller.backgroundPoint() ? "set" : "unset"}` +
      (s.pendingPreview ? "  previewing…" : "")
    : "no image";
  toast.textContent = s.message ?? "";
  toast.classList.toggle("visible", s.message !== null);
  fgButton.classList.toggle("active", s.mode === "fg" && !bgHeld);
  bgButton.classList.toggle("active", s.mode === "bg" || bgHeld);
  saveButton.disabled = !controller.canSave();
  imageList.replaceChildren(
    ...controller.images.map((im) => {
      const li = document.createElement("li");
      li.textContent = `${im.id} — ${im.status}`;
      li.classList.toggle("current", im.id === s.imageId);
      li.onclick = () => void controller.openImage(im.id);
      return li;
    }),
  );
}

controller.onChange(() => {
  rebuildOverlayCanvas();
  renderChrome();
  draw();
});

let lastImage: string | null = null;
controller.onChange(() => {
  if (controller.state.imageId !== lastImage && controller.state.imageId) {
    lastImage = controller.state.imageId;
    loadBaseImage(lastImage);
  }
});

canvas.addEventListener("click", (ev) => {
  if (ev.altKey) {
    return; // alt+drag pans
  }
  const rect = canvas.getBoundingClientRect();
  const p = canvasToImage(
    ev.clientX - rect.left,
    ev.clientY - rect.top,
    view,
    controller.state.imageWidth,
    controller.state.imageHeight,
  );
  if (!p) {
    return;
  }
  controller.addPoint(p, bgHeld ? "bg" : undefined);
});

canvas.addEventListener("contextmenu", (ev) => {
  ev.preventDefault();
  const rect = canvas.getBoundingClientRect();
  const p = canvasToImage(
    ev.clientX - rect.left,
    ev.clientY - rect.top,
    view,
    controller.state.imageWidth,
    controller.state.imageHeight,
  );
  if (p) {
    controller.addPoint(p, "bg");
  }
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  const rect = canvas.getBoundingClientRect();
  view = zoomAround(
    view,
    ev.clientX - rect.left,
    ev.clientY - rect.top,
    ev.deltaY < 0 ? 1.2 : 1 / 1.2,
  );
  draw();
});

canvas.addEventListener("mousedown", (ev) => {
  if (ev.altKey || ev.button === 1) {
    dragging = true;
    dragLast = { x: ev.clientX, y: ev.clientY };
    ev.preventDefault();
  }
});
window.addEventListener("mousemove", (ev) => {
  if (dragging) {
    view = pan(view, ev.clientX - dragLast.x, ev.clientY - dragLast.y);
    dragLast = { x: ev.clientX, y: ev.clientY };
    draw();
  }
});
window.addEventListener("mouseup", () => {
  dragging = false;
});

window.addEventListener("keydown", (ev) => {
  if (ev.repeat) {
    return;
  }
  if (ev.key === "b") {
    bgHeld = true;
    renderChrome();
    return;
  }
  const action = actionForKey(ev.key);
  if (action) {
    ev.preventDefault();
    void runAction(controller, action);
  }
});
window.addEventListener("keyup", (ev) => {
  if (ev.key === "b") {
    bgHeld = false;
    renderChrome();
  }
});

fgButton.onclick = () => controller.setMode("fg");
bgButton.onclick = () => controller.setMode("bg");
undoButton.onclick = () => void runAction(controller, "undo");
saveButton.onclick = () => void runAction(controller, "save");
window.addEventListener("resize", resizeCanvas);

void controller.init().then(() => {
  resizeCanvas();
});
