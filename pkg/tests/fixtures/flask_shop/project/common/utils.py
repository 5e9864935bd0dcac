import json
from decimal import Decimal


def money(value):
    return str(Decimal(value).quantize(Decimal("0.01")))


def to_json(item):
    return json.loads(json.dumps(item, default=str))
