from flask import Flask, jsonify

import events

app = Flask(__name__)


@app.route("/checkout", methods=["POST"])
async def checkout():
    total = events.compute_total({"items": []})
    events.send_notification(total)
    receipt = await events.fetch_receipt(total)
    await events.publish_event({"receipt": receipt})
    return jsonify({"total": total, "receipt": receipt})
