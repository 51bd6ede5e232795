// Clean-room facsimile of a BCM2835-family GPIO and pin controller driver.
// Register layout and call structure follow the hardware documentation;
// the code itself is written from scratch.

#include "bcm2835-kernel.h"

#define MODULE_NAME		"pinctrl-bcm2835"
#define BCM2835_NUM_GPIOS	58
#define BCM2835_NUM_BANKS	2
#define BCM2835_NUM_IRQS	3

/* register offsets, bank 0; bank 1 follows at +4 */
#define GPFSEL0		0x00
#define GPSET0		0x1c
#define GPCLR0		0x28
#define GPLEV0		0x34
#define GPEDS0		0x40
#define GPREN0		0x4c
#define GPFEN0		0x58
#define GPHEN0		0x64
#define GPLEN0		0x70
#define GPAREN0		0x7c
#define GPAFEN0		0x88
#define GPPUD		0x94

#define FSEL_REG(p)		(GPFSEL0 + (((p) / 10) * 4))
#define FSEL_SHIFT(p)		(((p) % 10) * 3)
#define GPIO_REG_OFFSET(p)	((p) / 32)
#define GPIO_REG_SHIFT(p)	((p) % 32)

struct bcm2835_pinctrl {
	struct device *dev;
	void __iomem *base;
	int irq[BCM2835_NUM_IRQS];
	unsigned long enabled_irq_map[BCM2835_NUM_BANKS];
	unsigned int irq_type[BCM2835_NUM_GPIOS];
	raw_spinlock_t irq_lock[BCM2835_NUM_BANKS];
};

/* event-detect enables cleared at probe, in this order */
static const unsigned int bcm2835_irq_regs[] = {
	GPREN0, GPFEN0, GPHEN0, GPLEN0, GPAREN0, GPAFEN0,
};

static inline u32 bcm2835_gpio_rd(struct bcm2835_pinctrl *pc, unsigned reg)
{
	return readl(pc->base + reg);
}

static inline void bcm2835_gpio_wr(struct bcm2835_pinctrl *pc, unsigned reg, u32 val)
{
	writel(val, pc->base + reg);
}

static inline int bcm2835_gpio_get_bit(struct bcm2835_pinctrl *pc, unsigned reg, unsigned bit)
{
	reg += GPIO_REG_OFFSET(bit) * 4;
	return (bcm2835_gpio_rd(pc, reg) >> GPIO_REG_SHIFT(bit)) & 1;
}

static void bcm2835_gpio_irq_config(struct bcm2835_pinctrl *pc, unsigned gpio, bool enable)
{
	unsigned bank = GPIO_REG_OFFSET(gpio);
	unsigned reg;

	switch (pc->irq_type[gpio]) {
	case IRQ_TYPE_EDGE_FALLING:
		reg = GPFEN0;
		break;
	case IRQ_TYPE_LEVEL_HIGH:
		reg = GPHEN0;
		break;
	case IRQ_TYPE_LEVEL_LOW:
		reg = GPLEN0;
		break;
	default:
		reg = GPREN0;
		break;
	}
	bcm2835_gpio_wr(pc, reg + bank * 4, enable ? BIT(GPIO_REG_SHIFT(gpio)) : 0);
}

static void bcm2835_gpio_irq_enable(struct irq_data *data)
{
	struct bcm2835_pinctrl *pc = irq_data_get_irq_chip_data(data);
	unsigned gpio = irqd_to_hwirq(data);
	unsigned offset = GPIO_REG_SHIFT(gpio);
	unsigned bank = GPIO_REG_OFFSET(gpio);
	unsigned long flags;

	if (gpio >= BCM2835_NUM_GPIOS) {
		dev_warn(pc->dev, "gpio %u out of range\n", gpio);
		return;
	}
	raw_spin_lock_irqsave(&pc->irq_lock[bank], flags);
	set_bit(offset, &pc->enabled_irq_map[bank]);
	bcm2835_gpio_irq_config(pc, gpio, true);
	raw_spin_unlock_irqrestore(&pc->irq_lock[bank], flags);
}

static void bcm2835_gpio_irq_disable(struct irq_data *data)
{
	struct bcm2835_pinctrl *pc = irq_data_get_irq_chip_data(data);
	unsigned gpio = irqd_to_hwirq(data);
	unsigned long flags;

	raw_spin_lock_irqsave(&pc->irq_lock[GPIO_REG_OFFSET(gpio)], flags);
	bcm2835_gpio_irq_config(pc, gpio, false);
	bcm2835_gpio_wr(pc, GPEDS0 + GPIO_REG_OFFSET(gpio) * 4, BIT(GPIO_REG_SHIFT(gpio)));
	clear_bit(GPIO_REG_SHIFT(gpio), &pc->enabled_irq_map[GPIO_REG_OFFSET(gpio)]);
	raw_spin_unlock_irqrestore(&pc->irq_lock[GPIO_REG_OFFSET(gpio)], flags);
}

/* Never run by the bundled commands; kept as realistic noise for the scanner. */
static int bcm2835_pmx_set(struct pinctrl_dev *pctldev, unsigned func, unsigned pin)
{
	struct bcm2835_pinctrl *pc = pinctrl_dev_get_drvdata(pctldev);
	u32 val = ({ u32 __v = bcm2835_gpio_rd(pc, FSEL_REG(pin)); __v; });

	val &= ~(7 << FSEL_SHIFT(pin));
	val |= func << FSEL_SHIFT(pin);
	asm volatile("dmb ish" ::: "memory");
	bcm2835_gpio_wr(pc, FSEL_REG(pin), val);
	return 0;
}

static const struct pinmux_ops bcm2835_pmx_ops = {
	.set_mux = bcm2835_pmx_set,
	.strict = true,
};

static int bcm2835_pinctrl_probe(struct platform_device *pdev)
{
	struct device *dev = &pdev->dev;
	struct device_node *np = dev->of_node;
	struct bcm2835_pinctrl *pc;
	struct resource iomem;
	int err, i, r;

	pc = devm_kzalloc(dev, sizeof(*pc), GFP_KERNEL);
	if (!pc)
		return -ENOMEM;

	platform_set_drvdata(pdev, pc);
	pc->dev = dev;

	err = of_address_to_resource(np, 0, &iomem);
	if (err) {
		dev_err(dev, "could not get IO memory\n");
		return -ENXIO;
	}

	pc->base = devm_ioremap_resource(dev, &iomem);
	if (IS_ERR(pc->base))
		return PTR_ERR(pc->base);

	for (i = 0; i < BCM2835_NUM_BANKS; i++) {
		for (r = 0; r < ARRAY_SIZE(bcm2835_irq_regs); r++)
			bcm2835_gpio_wr(pc, bcm2835_irq_regs[r] + i * 4, 0);
		raw_spin_lock_init(&pc->irq_lock[i]);
	}

	for (i = 0; i < BCM2835_NUM_IRQS; i++)
		pc->irq[i] = platform_get_irq(pdev, i);

	return 0;
}

MODULE_AUTHOR("Chris Boot");
MODULE_AUTHOR("Simon Arlott");
MODULE_AUTHOR("Stephen Warren");
MODULE_DESCRIPTION("Broadcom BCM2835/2711 pinctrl and GPIO driver");
MODULE_LICENSE("GPL");
