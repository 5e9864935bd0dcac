POINTS_PER_ORDER = 10


def award_points(order):
    return {"user_id": order["user_id"], "points": POINTS_PER_ORDER * len(order["items"])}
