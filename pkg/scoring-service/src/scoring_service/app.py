"""The /v1/score HTTP surface.

Single form:  POST {"input": str, "choices": [str, ...]}
              -> {"log_probs": [float, ...]}
Batch form:   POST {"items": [{"input": ..., "choices": [...]}, ...]}
              -> {"results": [{"log_probs": [...]}, ...]}

Malformed requests are 400s; scorer failures are 500s with the message.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from scoring_service.scorer import Scorer


def _parse_item(obj: dict) -> tuple:
    if not isinstance(obj, dict):
        raise ValueError("request item must be an object")
    if "input" not in obj or "choices" not in obj:
        raise ValueError("request item needs 'input' and 'choices'")
    text = obj["input"]
    choices = obj["choices"]
    if not isinstance(text, str):
        raise ValueError("'input' must be a string")
    if (
        not isinstance(choices, list)
        or not choices
        or not all(isinstance(c, str) for c in choices)
    ):
        raise ValueError("'choices' must be a non-empty list of strings")
    return text, choices


def create_app(scorer: Scorer, model_name: str = "unknown") -> FastAPI:
    app = FastAPI(title="scoring-service")
    app.state.scorer = scorer
    app.state.model_name = model_name

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "model": app.state.model_name}

    @app.post("/v1/score")
    async def score(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse({"error": "body is not valid JSON"}, status_code=400)
        try:
            if isinstance(payload, dict) and "items" in payload:
                items = payload["items"]
                if not isinstance(items, list):
                    raise ValueError("'items' must be a list")
                parsed = [_parse_item(item) for item in items]
            else:
                parsed = [_parse_item(payload)]
                items = None
        except ValueError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        try:
            results = [scorer.score_choices(text, choices) for text, choices in parsed]
        except Exception as exc:  # model failure
            return JSONResponse({"error": f"scoring failed: {exc}"}, status_code=500)
        if items is None:
            return {"log_probs": results[0]}
        return {"results": [{"log_probs": log_probs} for log_probs in results]}

    return app
