const express = require('express');
const service = require('../orders/service');

const router = express.Router();

router.post('/', async (req, res) => {
  const order = await service.placeOrder(req.user.sub, req.body);
  res.status(201).json(order);
});

router.get('/:id', async function getOrder(req, res) {
  const order = await service.findOrder(req.params.id);
  res.json(order);
});

router.post('/:id/cancel', async (req, res) => {
  await service.cancelOrder(req.params.id);
  res.status(202).json({ id: req.params.id, status: 'cancelled' });
});

module.exports = router;
