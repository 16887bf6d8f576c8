"""Line-delimited JSON oracle stub used by the subprocess tests.

Reads {"instances": [[...], ...]} per line and replies {"predictions": [...]}.
Modes:
  constant   -- always --value (a class name)
  threshold  -- class "1" when the sum of numeric values exceeds --value
  regress    -- the sum of numeric values (regression)
  garbage    -- reply something that is not JSON
Options:
  --die-after N   exit(3) after answering N batches
  --delay S       sleep S seconds before each reply
"""

import argparse
import json
import sys
import time


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mode", default="constant",
                    choices=["constant", "threshold", "regress", "garbage"])
    ap.add_argument("--value", default="0")
    ap.add_argument("--die-after", type=int, default=0)
    ap.add_argument("--delay", type=float, default=0.0)
    args = ap.parse_args()

    batches = 0
    for line in sys.stdin:
        req = json.loads(line)
        instances = req["instances"]
        if args.delay:
            time.sleep(args.delay)
        if args.mode == "garbage":
            sys.stdout.write("not json at all\n")
            sys.stdout.flush()
            continue
        preds = []
        for inst in instances:
            numeric_sum = sum(v for v in inst if isinstance(v, (int, float)))
            if args.mode == "constant":
                preds.append(args.value)
            elif args.mode == "threshold":
                preds.append("1" if numeric_sum > float(args.value) else "0")
            else:
                preds.append(numeric_sum)
        sys.stdout.write(json.dumps({"predictions": preds}) + "\n")
        sys.stdout.flush()
        batches += 1
        if args.die_after and batches >= args.die_after:
            sys.exit(3)


if __name__ == "__main__":
    main()
