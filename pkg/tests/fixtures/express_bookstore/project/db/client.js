const { DynamoDBClient } = require('@aws-sdk/client-dynamodb');
const { DynamoDBDocumentClient, GetCommand, PutCommand, ScanCommand } = require('@aws-sdk/lib-dynamodb');

const doc = DynamoDBDocumentClient.from(new DynamoDBClient({}));

async function listBooks() {
  const out = await doc.send(new ScanCommand({ TableName: 'books' }));
  return out.Items;
}

async function getBook(id) {
  const out = await doc.send(new GetCommand({ TableName: 'books', Key: { id } }));
  return out.Item;
}

async function putBook(book) {
  await doc.send(new PutCommand({ TableName: 'books', Item: book }));
  return book;
}

async function getOrder(id) {
  const out = await doc.send(new GetCommand({ TableName: 'orders', Key: { id } }));
  return out.Item;
}

async function putOrder(order) {
  await doc.send(new PutCommand({ TableName: 'orders', Item: order }));
}

module.exports = { listBooks, getBook, putBook, getOrder, putOrder };
