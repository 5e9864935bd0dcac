function computeTotal(cart) {
  return (cart.items || []).reduce((sum, item) => sum + item.price, 0);
}

function sendNotification(total) {
  console.log('total', total);
}

async function fetchReceipt(total) {
  return { total };
}

async function publishEvent(event) {
  return event;
}

module.exports = { computeTotal, sendNotification, fetchReceipt, publishEvent };
