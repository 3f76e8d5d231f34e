// Minimal binary P5 graymap parser for the rendered sample and norm-map
// endpoints.

export interface Graymap {
  w: number;
  h: number;
  pixels: Uint8Array;
}

export function parsePgm(raw: ArrayBuffer | Uint8Array): Graymap {
  const bytes = raw instanceof Uint8Array ? raw : new Uint8Array(raw);
  // header: "P5\n<w> <h>\n<maxval>\n"
  let pos = 0;
  const token = (): string => {
    while (pos < bytes.length && /\s/.test(String.fromCharCode(bytes[pos]))) pos++;
    let out = "";
    while (pos < bytes.length && !/\s/.test(String.fromCharCode(bytes[pos]))) {
      out += String.fromCharCode(bytes[pos]);
      pos++;
    }
    return out;
  };
  const magic = token();
  if (magic !== "P5") throw new Error(`not a binary graymap (magic ${magic})`);
  const w = parseInt(token(), 10);
  const h = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  if (!(w > 0 && h > 0) || maxval !== 255) throw new Error("unsupported graymap header");
  pos++; // single whitespace after maxval
  const pixels = bytes.slice(pos, pos + w * h);
  if (pixels.length !== w * h) throw new Error("truncated graymap payload");
  return { w, h, pixels };
}

/** Draw a graymap into a canvas 2D context, scaled by `zoom`. */
export function drawGraymap(
  ctx: CanvasRenderingContext2D,
  map: Graymap,
  zoom: number,
): void {
  const image = ctx.createImageData(map.w, map.h);
  for (let i = 0; i < map.pixels.length; i++) {
    const v = map.pixels[i];
    image.data[4 * i] = v;
    image.data[4 * i + 1] = v;
    image.data[4 * i + 2] = v;
    image.data[4 * i + 3] = 255;
  }
  const off = new OffscreenCanvas(map.w, map.h);
  const octx = off.getContext("2d")!;
  octx.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, map.w * zoom, map.h * zoom);
}
