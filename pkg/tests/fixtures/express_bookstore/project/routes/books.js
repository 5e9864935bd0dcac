const express = require('express');
const db = require('../db/client');
const { authenticate } = require('../middleware/auth');

const router = express.Router();

async function listBooks(req, res) {
  const books = await db.listBooks();
  res.json(books);
}

async function getBook(req, res) {
  const book = await db.getBook(req.params.id);
  if (!book) {
    return res.status(404).json({ error: 'not found' });
  }
  res.json(book);
}

const createBook = async (req, res) => {
  const book = await db.putBook(req.body);
  res.status(201).json(book);
};

router.get('/', listBooks);
router.get('/:id', getBook);
router.post('/', authenticate, createBook);

module.exports = router;
