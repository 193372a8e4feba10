import re
from collections import Counter

STOP_WORDS = {"the", "a", "an", "and", "of"}


def tokenize(text):
    return [w.lower() for w in re.findall(r"[A-Za-z']+", text) if w.lower() not in STOP_WORDS]


def top_words(text, limit=3):
    counts = Counter(tokenize(text))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [word for word, _ in ranked[:limit]]


def describe(text):
    words = tokenize(text)
    longest = max(words, key=len) if words else ""
    return f"{len(words)=} {longest=}"
