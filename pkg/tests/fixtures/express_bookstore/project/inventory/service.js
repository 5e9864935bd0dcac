const stock = new Map();

function reserveStock(order) {
  for (const item of order.items) {
    stock.set(item.sku, (stock.get(item.sku) || 0) - item.qty);
  }
}

function releaseStock(order) {
  for (const item of order.items) {
    stock.set(item.sku, (stock.get(item.sku) || 0) + item.qty);
  }
}

module.exports = { reserveStock, releaseStock };
