#!/usr/bin/env python3
"""Fill-mask server for the taxoeval local and HTTP backends.

Requests are {"model": str, "prompt": str, "top_k": int}; responses are
{"predictions": [{"token": str, "score": float}, ...]} ranked by score.

  hf_fill_mask.py --model NAME              JSON lines on stdin/stdout
  hf_fill_mask.py --model NAME --port 8080  POST /fill-mask over HTTP
  hf_fill_mask.py --model NAME --probe      exit 0 iff the model loads
"""

import argparse
import json
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


def load(model):
    from transformers import pipeline

    return pipeline("fill-mask", model=model)


def predict(fill, prompt, top_k):
    top_k = min(int(top_k), fill.tokenizer.vocab_size)
    out = fill(prompt, top_k=top_k)
    return [{"token": p["token_str"].strip(), "score": float(p["score"])} for p in out]


def serve_stdio(fill):
    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        body = {"predictions": predict(fill, req["prompt"], req.get("top_k", 10))}
        sys.stdout.write(json.dumps(body) + "\n")
        sys.stdout.flush()


def serve_http(fill, model, port):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if self.path != "/fill-mask":
                return self.reply(404, {"error": "not found"})
            try:
                req = json.loads(self.rfile.read(int(self.headers.get("Content-Length", 0))))
            except ValueError as e:
                return self.reply(400, {"error": str(e)})
            if req.get("model", model) != model:
                return self.reply(404, {"error": "unknown model " + str(req.get("model"))})
            mask = fill.tokenizer.mask_token
            if req.get("prompt", "").count(mask) != 1:
                return self.reply(400, {"error": "prompt needs exactly one " + mask})
            self.reply(200, {"predictions": predict(fill, req["prompt"], req.get("top_k", 10))})

        def reply(self, status, body):
            data = json.dumps(body).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):
            pass

    ThreadingHTTPServer(("127.0.0.1", port), Handler).serve_forever()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="bert-large-uncased-whole-word-masking")
    ap.add_argument("--port", type=int)
    ap.add_argument("--probe", action="store_true")
    args = ap.parse_args()
    try:
        fill = load(args.model)
    except Exception as e:  # missing package, no network, unknown model
        print("cannot load %s: %s" % (args.model, e), file=sys.stderr)
        return 3
    if args.probe:
        return 0
    if args.port:
        serve_http(fill, args.model, args.port)
    else:
        serve_stdio(fill)
    return 0


if __name__ == "__main__":
    sys.exit(main())
