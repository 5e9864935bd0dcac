import asyncio


def compute_total(cart):
    return sum(item["price"] for item in cart["items"])


def send_notification(total):
    print("total", total)


async def fetch_receipt(total):
    await asyncio.sleep(0)
    return {"total": total}


async def publish_event(event):
    await asyncio.sleep(0)
