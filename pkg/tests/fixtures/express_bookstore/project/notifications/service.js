function sendConfirmation(order) {
  console.log(`order ${order.id} confirmed for ${order.userId}`);
}

module.exports = { sendConfirmation };
