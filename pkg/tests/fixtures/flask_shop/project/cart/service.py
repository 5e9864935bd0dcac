from common.db import table

carts = table("carts")


def list_items(user_id):
    return carts.query(KeyConditionExpression="user_id = :u", ExpressionAttributeValues={":u": user_id})["Items"]


def total(items):
    return sum(float(i["price"]) * int(i["qty"]) for i in items)


def add_item(user_id, body):
    item = {"user_id": user_id, "item_id": body["sku"], "price": body["price"], "qty": body.get("qty", 1)}
    carts.put_item(Item=item)
    return item


def remove_item(user_id, item_id):
    carts.delete_item(Key={"user_id": user_id, "item_id": item_id})


def clear(user_id):
    for item in list_items(user_id):
        remove_item(user_id, item["item_id"])
