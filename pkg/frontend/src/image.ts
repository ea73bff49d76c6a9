// Turning a user-selected file into an ImageFrame-shaped result value.
// The MIME filter is pure (testable); the dimension/base64 reader needs
// browser APIs and stays thin.

export interface ImageMeta {
  mime: "image/png" | "image/jpeg";
  width: number;
  height: number;
  data: string; // base64
}

export function supportedImageMime(mime: string): mime is ImageMeta["mime"] {
  return mime === "image/png" || mime === "image/jpeg";
}

export function imageResultValue(meta: ImageMeta): Record<string, unknown> {
  return {
    mime: meta.mime,
    width: meta.width,
    height: meta.height,
    data: meta.data,
    captured_at: Date.now(),
  };
}

function bytesToBase64(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

/** Read dimensions and base64 data from an uploaded PNG/JPEG file. */
export async function readImageFile(file: File): Promise<ImageMeta> {
  if (!supportedImageMime(file.type)) {
    throw new Error(`unsupported file type ${file.type || "(unknown)"}; use PNG or JPEG`);
  }
  const buffer = new Uint8Array(await file.arrayBuffer());
  const data = bytesToBase64(buffer);
  const url = URL.createObjectURL(file);
  try {
    const image = await new Promise<HTMLImageElement>((resolve, reject) => {
      const img = new Image();
      img.onload = () => resolve(img);
      img.onerror = () => reject(new Error("file does not decode as an image"));
      img.src = url;
    });
    return {
      mime: file.type,
      width: image.naturalWidth,
      height: image.naturalHeight,
      data,
    };
  } finally {
    URL.revokeObjectURL(url);
  }
}
