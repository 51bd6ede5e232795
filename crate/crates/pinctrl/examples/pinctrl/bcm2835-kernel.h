/* The slice of kernel API the pin controller facsimile compiles against. */
#ifndef BCM2835_KERNEL_H
#define BCM2835_KERNEL_H

#define __init
#define __iomem
#define GFP_KERNEL	0
#define ENOMEM		12
#define ENXIO		6
#define EINVAL		22

#define BIT(nr)			(1UL << (nr))
#define ARRAY_SIZE(arr)		(sizeof(arr) / sizeof((arr)[0]))

#define MODULE_AUTHOR(who)
#define MODULE_DESCRIPTION(what)
#define MODULE_LICENSE(which)

enum {
	IRQ_TYPE_NONE		= 0,
	IRQ_TYPE_EDGE_RISING	= 1,
	IRQ_TYPE_EDGE_FALLING	= 2,
	IRQ_TYPE_LEVEL_HIGH	= 4,
	IRQ_TYPE_LEVEL_LOW	= 8,
};

typedef struct raw_spinlock {
	unsigned int owner;
} raw_spinlock_t;

struct device_node {
	const char *full_name;
};

struct device {
	struct device_node *of_node;
	void *driver_data;
};

struct platform_device {
	const char *name;
	int id;
	struct device dev;
};

struct resource {
	resource_size_t start;
	resource_size_t end;
	unsigned long flags;
};

struct irq_data {
	unsigned int irq;
	unsigned long hwirq;
	void *chip_data;
};

#define raw_spin_lock_irqsave(lock, flags)		\
	do {						\
		flags = 0;				\
		_raw_spin_lock(lock);			\
	} while (0)
#define raw_spin_unlock_irqrestore(lock, flags)	_raw_spin_unlock(lock)

static inline void *platform_get_drvdata(const struct platform_device *pdev)
{
	return pdev->dev.driver_data;
}

static inline void platform_set_drvdata(struct platform_device *pdev, void *data)
{
	pdev->dev.driver_data = data;
}

static inline void *irq_data_get_irq_chip_data(struct irq_data *d)
{
	return d->chip_data;
}

#endif
