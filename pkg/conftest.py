# keeps the repo root importable so tests can share oracle helpers
