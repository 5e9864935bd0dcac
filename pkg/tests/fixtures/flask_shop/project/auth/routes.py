from flask import Blueprint, jsonify, request

from common.auth import issue_token, login_required

auth_bp = Blueprint("auth", __name__)


@auth_bp.route("/register", methods=["POST"])
def register():
    body = request.get_json()
    return jsonify({"username": body["username"]}), 201


@auth_bp.route("/login", methods=["POST"])
def login():
    body = request.get_json()
    return jsonify({"token": issue_token(body["username"])})


@auth_bp.route("/logout", methods=["POST"])
@login_required
def logout():
    return "", 204
