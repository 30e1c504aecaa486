/** Bundle manifest reading: which languages exist and which extensions they own. */

import { readFile } from "node:fs/promises";

export interface BundleLanguage {
  name: string;
  extensions: string[];
  start: string;
  fragments: string[];
  config: string;
}

export interface BundleManifest {
  version: string;
  languages: BundleLanguage[];
}

export class ManifestError extends Error {}

function asStringArray(value: unknown, what: string): string[] {
  if (!Array.isArray(value) || value.some((v) => typeof v !== "string")) {
    throw new ManifestError(`manifest field ${what} must be an array of strings`);
  }
  return value as string[];
}

export function parseManifest(text: string): BundleManifest {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch (err) {
    throw new ManifestError(`bundle manifest is not valid JSON: ${(err as Error).message}`);
  }
  if (typeof data !== "object" || data === null) {
    throw new ManifestError("bundle manifest must be a JSON object");
  }
  const record = data as Record<string, unknown>;
  if (!Array.isArray(record.languages) || record.languages.length === 0) {
    throw new ManifestError("bundle manifest needs a non-empty languages array");
  }
  const languages = record.languages.map((entry, index) => {
    if (typeof entry !== "object" || entry === null) {
      throw new ManifestError(`languages[${index}] must be an object`);
    }
    const lang = entry as Record<string, unknown>;
    if (typeof lang.name !== "string" || lang.name === "") {
      throw new ManifestError(`languages[${index}].name must be a non-empty string`);
    }
    return {
      name: lang.name,
      extensions: asStringArray(lang.extensions, `languages[${index}].extensions`),
      start: typeof lang.start === "string" ? lang.start : "",
      fragments: Array.isArray(lang.fragments)
        ? asStringArray(lang.fragments, `languages[${index}].fragments`)
        : [],
      config: typeof lang.config === "string" ? lang.config : "",
    };
  });
  return {
    version: typeof record.version === "string" ? record.version : "0",
    languages,
  };
}

export async function readManifest(path: string): Promise<BundleManifest> {
  let text: string;
  try {
    text = await readFile(path, "utf-8");
  } catch (err) {
    throw new ManifestError(`cannot read bundle manifest ${path}: ${(err as Error).message}`);
  }
  return parseManifest(text);
}

/** The language owning a file extension (".msc"), or undefined. */
export function languageForExtension(
  manifest: BundleManifest,
  extension: string,
): BundleLanguage | undefined {
  return manifest.languages.find((lang) => lang.extensions.includes(extension));
}
