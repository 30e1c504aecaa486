/** End-to-end smoke: the client against the real fragmentc server. */
import { execFile } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { promisify } from "node:util";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { DocumentSymbol } from "../src/client.js";
import { EditorHost, ExtensionHandle, LanguageRegistration, activate } from "../src/extension.js";

const run = promisify(execFile);

const REPO = resolve(__dirname, "..", "..");
const CORPUS = join(REPO, "corpus");
const PYTHON = process.env.FRAGMENTC_PYTHON ?? "python3";

class FakeHost implements EditorHost {
  languages: LanguageRegistration[] = [];
  commands = new Map<string, (...args: unknown[]) => Promise<unknown>>();
  diagnostics = new Map<string, unknown[]>();
  errors: string[] = [];

  registerLanguage(registration: LanguageRegistration): void {
    this.languages.push(registration);
  }

  registerCommand(command: string, runCommand: (...args: unknown[]) => Promise<unknown>): void {
    this.commands.set(command, runCommand);
  }

  publishDiagnostics(uri: string, diagnostics: unknown[]): void {
    this.diagnostics.set(uri, diagnostics);
  }

  showError(message: string): void {
    this.errors.push(message);
  }
}

function symbolNames(symbols: DocumentSymbol[]): string[] {
  const names: string[] = [];
  for (const symbol of symbols) {
    names.push(symbol.name);
    names.push(...symbolNames(symbol.children ?? []));
  }
  return names;
}

describe("extension against the live server", () => {
  let workDir: string;
  let bundlePath: string;
  let host: FakeHost;
  let handle: ExtensionHandle | undefined;

  beforeAll(async () => {
    workDir = mkdtempSync(join(tmpdir(), "fragmentc-e2e-"));
    bundlePath = join(workDir, "bundle.json");
    await run(
      PYTHON,
      [
        "-m",
        "fragmentc",
        "bundle",
        `${join(CORPUS, "msc.mctool")}=.msc`,
        `${join(CORPUS, "vipmsc.mctool")}=.vmsc`,
        "--out",
        bundlePath,
      ],
      { cwd: REPO },
    );
    host = new FakeHost();
    handle = await activate(
      { serverPath: PYTHON, serverArgs: ["-m", "fragmentc"], bundlePath },
      host,
    );
    expect(host.errors).toEqual([]);
    expect(handle).toBeDefined();
  }, 30000);

  afterAll(async () => {
    await handle?.deactivate();
  });

  it("registers every bundled language with its extensions", () => {
    expect(host.languages).toEqual([
      { id: "MSC", extensions: [".msc"] },
      { id: "VipMSC", extensions: [".vmsc"] },
    ]);
  });

  it("opens the mail fixture and receives empty diagnostics", async () => {
    const path = join(CORPUS, "documents", "mail.msc");
    const uri = handle!.openFile(path, readFileSync(path, "utf-8"));
    expect(uri).toBeDefined();
    const diagnostics = await handle!.client.diagnosticsFor(uri!);
    expect(diagnostics).toEqual([]);
  });

  it("document symbols include the send-event label", async () => {
    const path = join(CORPUS, "documents", "mail.msc");
    const uri = handle!.openFile(path, readFileSync(path, "utf-8"))!;
    const symbols = await handle!.client.documentSymbols(uri);
    expect(symbolNames(symbols)).toContain("Send to receiver:message");
  });

  it("format command returns a whole-document edit that is stable", async () => {
    const path = join(workDir, "one.msc");
    const opened = handle!.openFile(path, "msc m{instance a{}}")!;
    const edits = await handle!.client.formatDocument(opened);
    expect(edits).toHaveLength(1);
    expect(edits[0].range.start).toEqual({ line: 0, character: 0 });
    expect(edits[0].newText).toBe("msc m {\n  instance a {\n  }\n}\n");
    handle!.changeFile(path, edits[0].newText);
    const again = await handle!.client.formatDocument(opened);
    expect(again[0].newText).toBe(edits[0].newText);
  });

  it("routes both languages to the same running server", async () => {
    const vip = join(workDir, "crew.vmsc");
    const uri = handle!.openFile(vip, "msc v {\n  instance a {\n    vip boss ;\n  }\n}\n")!;
    const diagnostics = await handle!.client.diagnosticsFor(uri);
    expect(diagnostics).toEqual([]);
    const symbols = await handle!.client.documentSymbols(uri);
    expect(symbolNames(symbols)).toContain("VipInstance a");
    expect(handle!.languageIdFor(vip)).toBe("VipMSC");
    expect(handle!.languageIdFor(join(workDir, "x.msc"))).toBe("MSC");
  });

  it("runs the trace command through the palette surface", async () => {
    // copy the fixture so the generated artifact lands in the temp dir
    const mail = join(workDir, "mail.msc");
    const text = readFileSync(join(CORPUS, "documents", "mail.msc"), "utf-8");
    writeFileSync(mail, text);
    const runTrace = host.commands.get("demo.msc.GenerateTraceAction");
    expect(runTrace).toBeDefined();
    const result = (await runTrace!(mail)) as { newFiles: string[]; reports: unknown[] };
    expect(result.reports).toEqual([]);
    expect(result.newFiles.some((file) => file.endsWith("mail.trace.txt"))).toBe(true);
    const oracle = readFileSync(join(CORPUS, "oracle", "mail.trace.txt"), "utf-8");
    expect(readFileSync(join(workDir, "mail.trace.txt"), "utf-8")).toBe(oracle);
  });
});

describe("activation failure paths", () => {
  it("missing bundle file notifies without crashing", async () => {
    const host = new FakeHost();
    const handle = await activate(
      { serverPath: PYTHON, serverArgs: ["-m", "fragmentc"], bundlePath: "/nowhere/bundle.json" },
      host,
    );
    expect(handle).toBeUndefined();
    expect(host.errors).toHaveLength(1);
    expect(host.errors[0]).toContain("bundle not found");
    expect(host.languages).toEqual([]);
  });

  it("missing server binary notifies without crashing", async () => {
    const workDir = mkdtempSync(join(tmpdir(), "fragmentc-e2e-"));
    const bundlePath = join(workDir, "bundle.json");
    await run(
      PYTHON,
      ["-m", "fragmentc", "bundle", `${join(CORPUS, "msc.mctool")}=.msc`, "--out", bundlePath],
      { cwd: REPO },
    );
    const host = new FakeHost();
    const handle = await activate(
      { serverPath: "/nowhere/fragmentc-server", bundlePath },
      host,
    );
    expect(handle).toBeUndefined();
    expect(host.errors.some((e) => e.includes("failed to start"))).toBe(true);
  }, 30000);
});
