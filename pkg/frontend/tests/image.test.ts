import { describe, expect, it } from "vitest";

import { imageResultValue, supportedImageMime } from "../src/image.js";

describe("upload type filter", () => {
  it("accepts only PNG and JPEG", () => {
    expect(supportedImageMime("image/png")).toBe(true);
    expect(supportedImageMime("image/jpeg")).toBe(true);
    expect(supportedImageMime("text/plain")).toBe(false);
    expect(supportedImageMime("image/gif")).toBe(false);
    expect(supportedImageMime("")).toBe(false);
  });

  it("shapes the result value like an ImageFrame", () => {
    const value = imageResultValue({
      mime: "image/jpeg",
      width: 3,
      height: 2,
      data: "Zm9v",
    });
    expect(value).toMatchObject({ mime: "image/jpeg", width: 3, height: 2, data: "Zm9v" });
    expect(typeof value.captured_at).toBe("number");
  });
});
