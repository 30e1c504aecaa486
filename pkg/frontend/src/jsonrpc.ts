/** Content-Length framed JSON-RPC codec over byte streams. */

export interface RpcMessage {
  jsonrpc: "2.0";
  id?: number | string;
  method?: string;
  params?: unknown;
  result?: unknown;
  error?: { code: number; message: string };
}

export function encodeMessage(message: object): Buffer {
  const body = Buffer.from(JSON.stringify(message), "utf-8");
  return Buffer.concat([
    Buffer.from(`Content-Length: ${body.length}\r\n\r\n`, "ascii"),
    body,
  ]);
}

/** Incremental decoder: feed arbitrary chunks, get whole messages out. */
export class MessageDecoder {
  private buffer = Buffer.alloc(0);

  feed(chunk: Buffer): RpcMessage[] {
    this.buffer = Buffer.concat([this.buffer, chunk]);
    const messages: RpcMessage[] = [];
    for (;;) {
      const headerEnd = this.buffer.indexOf("\r\n\r\n");
      if (headerEnd === -1) {
        return messages;
      }
      const header = this.buffer.subarray(0, headerEnd).toString("ascii");
      const match = /content-length:\s*(\d+)/i.exec(header);
      if (match === null) {
        // skip a malformed header rather than stalling the stream
        this.buffer = this.buffer.subarray(headerEnd + 4);
        continue;
      }
      const length = Number(match[1]);
      const total = headerEnd + 4 + length;
      if (this.buffer.length < total) {
        return messages;
      }
      const body = this.buffer.subarray(headerEnd + 4, total).toString("utf-8");
      this.buffer = this.buffer.subarray(total);
      messages.push(JSON.parse(body) as RpcMessage);
    }
  }
}
