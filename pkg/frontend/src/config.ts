/**
 * API origin resolution, checked in order:
 *   1. `window.BAYESCAT_API_BASE` — set by a script tag or the hosting page;
 *   2. `<meta name="bayescat-api-base" content="...">` in the document;
 *   3. same origin ("") — the default when the API serves the UI itself.
 * A trailing slash is stripped so paths can always start with "/".
 */
export function resolveApiBase(
  win: Record<string, unknown>,
  doc: Pick<Document, "querySelector">,
): string {
  const fromWindow = win["BAYESCAT_API_BASE"];
  if (typeof fromWindow === "string" && fromWindow.length > 0) {
    return stripSlash(fromWindow);
  }
  const meta = doc.querySelector('meta[name="bayescat-api-base"]');
  const content = meta?.getAttribute("content");
  if (typeof content === "string" && content.length > 0) {
    return stripSlash(content);
  }
  return "";
}

function stripSlash(base: string): string {
  return base.endsWith("/") ? base.slice(0, -1) : base;
}
