import logging

log = logging.getLogger(__name__)


def notify_customer(order):
    log.info("order %s placed for %s", order["order_id"], order["user_id"])
