/** Minimal language client: spawns the server and speaks LSP over its stdio. */

import { ChildProcess, spawn } from "node:child_process";
import { pathToFileURL } from "node:url";

import { MessageDecoder, RpcMessage, encodeMessage } from "./jsonrpc.js";

export interface Diagnostic {
  range: {
    start: { line: number; character: number };
    end: { line: number; character: number };
  };
  severity?: number;
  message: string;
  source?: string;
}

export interface DocumentSymbol {
  name: string;
  detail?: string;
  kind: number;
  children?: DocumentSymbol[];
}

export interface TextEdit {
  range: {
    start: { line: number; character: number };
    end: { line: number; character: number };
  };
  newText: string;
}

export interface ServerCapabilities {
  foldingRangeProvider?: boolean;
  documentSymbolProvider?: boolean;
  documentFormattingProvider?: boolean;
  executeCommandProvider?: { commands: string[] };
  [key: string]: unknown;
}

export interface ClientEvents {
  onDiagnostics?: (uri: string, version: number | undefined, diagnostics: Diagnostic[]) => void;
  onError?: (message: string) => void;
  onExit?: (code: number | null) => void;
}

export function toUri(path: string): string {
  return pathToFileURL(path).toString();
}

export class LanguageClient {
  private child: ChildProcess | undefined;
  private decoder = new MessageDecoder();
  private nextId = 1;
  private pending = new Map<number, (message: RpcMessage) => void>();
  private diagnosticWaiters: Array<(uri: string) => void> = [];
  private lastDiagnostics = new Map<string, Diagnostic[]>();
  capabilities: ServerCapabilities = {};

  constructor(
    private readonly command: string,
    private readonly args: string[],
    private readonly events: ClientEvents = {},
  ) {}

  /** Spawn the server and run the initialize handshake. */
  async start(timeoutMs = 15000): Promise<ServerCapabilities> {
    const child = spawn(this.command, this.args, { stdio: ["pipe", "pipe", "inherit"] });
    this.child = child;
    const spawned = new Promise<void>((resolve, reject) => {
      child.once("spawn", () => resolve());
      child.once("error", (err) => reject(new Error(`cannot launch server: ${err.message}`)));
    });
    child.stdout!.on("data", (chunk: Buffer) => {
      for (const message of this.decoder.feed(chunk)) {
        this.dispatch(message);
      }
    });
    child.on("exit", (code) => this.events.onExit?.(code));
    await spawned;
    const response = await this.request("initialize", {}, timeoutMs);
    this.capabilities =
      ((response as Record<string, unknown>)?.capabilities as ServerCapabilities) ?? {};
    this.notify("initialized", {});
    return this.capabilities;
  }

  private dispatch(message: RpcMessage): void {
    if (typeof message.id === "number" && message.method === undefined) {
      const resolve = this.pending.get(message.id);
      if (resolve !== undefined) {
        this.pending.delete(message.id);
        resolve(message);
      }
      return;
    }
    if (message.method === "textDocument/publishDiagnostics") {
      const params = message.params as {
        uri: string;
        version?: number;
        diagnostics: Diagnostic[];
      };
      this.lastDiagnostics.set(params.uri, params.diagnostics);
      this.events.onDiagnostics?.(params.uri, params.version, params.diagnostics);
      for (const waiter of this.diagnosticWaiters.splice(0)) {
        waiter(params.uri);
      }
    }
  }

  private send(message: object): void {
    if (this.child?.stdin == null) {
      throw new Error("language client is not running");
    }
    this.child.stdin.write(encodeMessage(message));
  }

  notify(method: string, params: unknown): void {
    this.send({ jsonrpc: "2.0", method, params });
  }

  request(method: string, params: unknown, timeoutMs = 15000): Promise<unknown> {
    const id = this.nextId++;
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        this.pending.delete(id);
        reject(new Error(`request ${method} timed out`));
      }, timeoutMs);
      this.pending.set(id, (message) => {
        clearTimeout(timer);
        if (message.error !== undefined) {
          reject(new Error(`${method}: ${message.error.message}`));
        } else {
          resolve(message.result);
        }
      });
      this.send({ jsonrpc: "2.0", id, method, params });
    });
  }

  // -- document lifecycle ----------------------------------------------------

  openDocument(uri: string, languageId: string, version: number, text: string): void {
    this.notify("textDocument/didOpen", {
      textDocument: { uri, languageId, version, text },
    });
  }

  changeDocument(uri: string, version: number, text: string): void {
    this.notify("textDocument/didChange", {
      textDocument: { uri, version },
      contentChanges: [{ text }],
    });
  }

  closeDocument(uri: string): void {
    this.notify("textDocument/didClose", { textDocument: { uri } });
  }

  /** Diagnostics already received for a uri, or wait for the next publish. */
  async diagnosticsFor(uri: string, timeoutMs = 15000): Promise<Diagnostic[]> {
    const known = this.lastDiagnostics.get(uri);
    if (known !== undefined) {
      return known;
    }
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error(`no diagnostics published for ${uri}`)),
        timeoutMs,
      );
      const check = (published: string) => {
        if (published === uri) {
          clearTimeout(timer);
          resolve(this.lastDiagnostics.get(uri) ?? []);
        } else {
          this.diagnosticWaiters.push(check);
        }
      };
      this.diagnosticWaiters.push(check);
    });
  }

  documentSymbols(uri: string): Promise<DocumentSymbol[]> {
    return this.request("textDocument/documentSymbol", {
      textDocument: { uri },
    }) as Promise<DocumentSymbol[]>;
  }

  foldingRanges(uri: string): Promise<unknown[]> {
    return this.request("textDocument/foldingRange", {
      textDocument: { uri },
    }) as Promise<unknown[]>;
  }

  formatDocument(uri: string): Promise<TextEdit[]> {
    return this.request("textDocument/formatting", {
      textDocument: { uri },
      options: { tabSize: 2, insertSpaces: true },
    }) as Promise<TextEdit[]>;
  }

  executeCommand(command: string, args: unknown[]): Promise<unknown> {
    return this.request("workspace/executeCommand", { command, arguments: args });
  }

  async stop(): Promise<void> {
    if (this.child === undefined) {
      return;
    }
    const child = this.child;
    try {
      await this.request("shutdown", null, 3000);
      this.notify("exit", null);
      await new Promise<void>((resolve) => {
        const timer = setTimeout(() => {
          child.kill();
          resolve();
        }, 3000);
        child.once("exit", () => {
          clearTimeout(timer);
          resolve();
        });
      });
    } catch {
      child.kill();
    } finally {
      this.child = undefined;
    }
  }
}
