import uuid

from common.db import table
from loyalty.service import award_points
from notifications.service import notify_customer
from shipping.service import schedule_return

orders = table("orders")


def place_order(user_id, cart):
    order = {"order_id": str(uuid.uuid4()), "user_id": user_id, "items": cart["items"], "status": "placed"}
    orders.put_item(Item=order)
    notify_customer(order)
    award_points(order)
    return order


def find_order(order_id):
    return orders.get_item(Key={"order_id": order_id})["Item"]


def cancel_order(order_id):
    order = find_order(order_id)
    orders.update_item(
        Key={"order_id": order_id},
        UpdateExpression="SET #s = :s",
        ExpressionAttributeNames={"#s": "status"},
        ExpressionAttributeValues={":s": "cancelled"},
    )
    schedule_return(order)
