"""Recomputes every truncated href/src in html_pruning_golden.json with
urllib: scheme and authority kept, then the delimiter and ten characters."""
import json
import re
import sys
from urllib.parse import urlsplit


def truncate(url):
    parts = urlsplit(url)
    if not parts.netloc:
        return url
    head = f"{parts.scheme}://{parts.netloc}"
    rest = url[len(head):]
    return head + rest[:11]


def main(path):
    ok = True
    for case in json.load(open(path)):
        sources = re.findall(r'<(?:a|img)\b[^>]*?\b(?:href|src)="([^"]*)"', case["input"])
        outputs = re.findall(r'<(?:a|img)\b[^>]*?\b(?:href|src)="([^"]*)"', case["expected"])
        for src, out in zip(sources, outputs):
            if truncate(src) != out:
                ok = False
                print(f"{case['name']}: {src} -> {truncate(src)} but golden has {out}")
    print("url goldens agree" if ok else "MISMATCH")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))
