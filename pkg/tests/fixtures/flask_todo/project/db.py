import uuid

import boto3

dynamodb = boto3.resource("dynamodb")
todos_table = dynamodb.Table("todos")
users_table = dynamodb.Table("users")


def put_user(username, password):
    item = {"id": str(uuid.uuid4()), "username": username, "password": password}
    users_table.put_item(Item=item)
    return item


def find_user(username):
    result = users_table.scan(FilterExpression="username = :u", ExpressionAttributeValues={":u": username})
    items = result.get("Items", [])
    return items[0] if items else None


def list_todos(user_id):
    result = todos_table.scan(FilterExpression="user_id = :u", ExpressionAttributeValues={":u": user_id})
    return result.get("Items", [])


def put_todo(user_id, body):
    item = {"id": str(uuid.uuid4()), "user_id": user_id, "title": body["title"], "done": False}
    todos_table.put_item(Item=item)
    return item


def delete_todo(user_id, todo_id):
    todos_table.delete_item(Key={"id": str(todo_id)})
