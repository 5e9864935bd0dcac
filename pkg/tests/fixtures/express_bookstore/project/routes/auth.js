const express = require('express');
const { authenticate, issueToken } = require('../middleware/auth');

const router = express.Router();

router.post('/register', (req, res) => {
  res.status(201).json({ username: req.body.username });
});

router.post('/login', (req, res) => {
  const token = issueToken(req.body.username);
  res.json({ token });
});

router.post('/logout', authenticate, (req, res) => res.status(204).end());

module.exports = router;
