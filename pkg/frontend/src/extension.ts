/** The thin editor extension.
 *
 * Reads a bundle manifest, registers every bundled language's file
 * extensions with the hosting editor, launches the language server binary
 * over stdio, and surfaces the server's commands. All language behavior
 * lives server-side; this module only routes.
 */

import { existsSync } from "node:fs";
import { extname } from "node:path";

import { Diagnostic, LanguageClient, toUri } from "./client.js";
import { BundleManifest, ManifestError, languageForExtension, readManifest } from "./manifest.js";

export interface ClientConfig {
  /** Server executable (e.g. "fragmentc", or "python3" with extra args). */
  serverPath: string;
  /** Arguments placed before `serve <bundlePath>` (e.g. ["-m", "fragmentc"]). */
  serverArgs?: string[];
  /** The bundle manifest JSON emitted by `fragmentc bundle`. */
  bundlePath: string;
}

export interface LanguageRegistration {
  id: string;
  extensions: string[];
}

/** What the hosting editor must provide; mirrors the VS Code API surface used. */
export interface EditorHost {
  registerLanguage(registration: LanguageRegistration): void;
  registerCommand(command: string, run: (...args: unknown[]) => Promise<unknown>): void;
  publishDiagnostics(uri: string, diagnostics: Diagnostic[]): void;
  showError(message: string): void;
}

export class ExtensionHandle {
  private versions = new Map<string, number>();

  constructor(
    readonly manifest: BundleManifest,
    readonly client: LanguageClient,
  ) {}

  languageIdFor(path: string): string | undefined {
    return languageForExtension(this.manifest, extname(path))?.name;
  }

  /** didOpen with the language id looked up from the manifest. */
  openFile(path: string, text: string): string | undefined {
    const languageId = this.languageIdFor(path);
    if (languageId === undefined) {
      return undefined;
    }
    const uri = toUri(path);
    this.versions.set(uri, 1);
    this.client.openDocument(uri, languageId, 1, text);
    return uri;
  }

  changeFile(path: string, text: string): string {
    const uri = toUri(path);
    const version = (this.versions.get(uri) ?? 0) + 1;
    this.versions.set(uri, version);
    this.client.changeDocument(uri, version, text);
    return uri;
  }

  async deactivate(): Promise<void> {
    await this.client.stop();
  }
}

/**
 * Activate the extension: one client per bundle.
 *
 * Returns undefined (after a host error notification) when the bundle or the
 * server binary is unusable; it never throws on missing inputs.
 */
export async function activate(
  config: ClientConfig,
  host: EditorHost,
): Promise<ExtensionHandle | undefined> {
  if (!existsSync(config.bundlePath)) {
    host.showError(`fragmentc bundle not found: ${config.bundlePath}`);
    return undefined;
  }
  let manifest: BundleManifest;
  try {
    manifest = await readManifest(config.bundlePath);
  } catch (err) {
    if (err instanceof ManifestError) {
      host.showError(err.message);
      return undefined;
    }
    throw err;
  }

  for (const language of manifest.languages) {
    host.registerLanguage({ id: language.name, extensions: language.extensions });
  }

  const client = new LanguageClient(
    config.serverPath,
    [...(config.serverArgs ?? []), "serve", config.bundlePath],
    {
      onDiagnostics: (uri, _version, diagnostics) => host.publishDiagnostics(uri, diagnostics),
      onError: (message) => host.showError(message),
    },
  );
  try {
    await client.start();
  } catch (err) {
    host.showError(`fragmentc server failed to start: ${(err as Error).message}`);
    return undefined;
  }

  for (const command of client.capabilities.executeCommandProvider?.commands ?? []) {
    host.registerCommand(command, (...args: unknown[]) =>
      client.executeCommand(
        command,
        args.map((arg) => (typeof arg === "string" && existsSync(arg) ? toUri(arg) : arg)),
      ),
    );
  }

  return new ExtensionHandle(manifest, client);
}
