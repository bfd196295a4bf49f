// Thin canvas painter for layout shapes; all geometry lives in layout.ts.

import type { HoleShape, Shape } from "./layout.js";

export function paintScene(ctx: CanvasRenderingContext2D, shapes: Shape[]): void {
  for (const shape of shapes) {
    if (shape.kind === "rect") {
      ctx.globalAlpha = shape.alpha ?? 1;
      if (shape.fill !== "none") {
        ctx.fillStyle = shape.fill;
        ctx.fillRect(shape.x, shape.y, shape.w, shape.h);
      }
      if (shape.stroke) {
        ctx.globalAlpha = 1;
        ctx.strokeStyle = shape.stroke;
        ctx.lineWidth = shape.strokeWidth ?? 1;
        ctx.strokeRect(shape.x, shape.y, shape.w, shape.h);
      }
    } else {
      ctx.globalAlpha = 0.9;
      ctx.fillStyle = shape.fill;
      const half = shape.size / 2;
      const base = shape.direction === "up" ? shape.y + shape.size : shape.y - shape.size;
      ctx.beginPath();
      ctx.moveTo(shape.x, shape.y);
      ctx.lineTo(shape.x - half, base);
      ctx.lineTo(shape.x + half, base);
      ctx.closePath();
      ctx.fill();
    }
  }
  ctx.globalAlpha = 1;
}

export function paintFluteIcon(ctx: CanvasRenderingContext2D, holes: HoleShape[]): void {
  for (const hole of holes) {
    ctx.beginPath();
    ctx.arc(hole.cx, hole.cy, hole.r, 0, Math.PI * 2);
    ctx.fillStyle = hole.fill;
    ctx.fill();
    ctx.strokeStyle = "#222222";
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }
}

export function clear(ctx: CanvasRenderingContext2D, width: number, height: number): void {
  ctx.fillStyle = "#101014";
  ctx.fillRect(0, 0, width, height);
}
